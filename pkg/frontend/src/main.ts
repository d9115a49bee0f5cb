// Bootstrapping: pick chair or participant mode, keep the view model in sync
// with the event stream, refetch a snapshot when the sequence gaps.

import { GatewayApi } from "./api.js";
import { ParticipantView } from "./participant.js";
import {
  applySnapshot,
  applyStreamEvent,
  emptyModel,
  type ViewModel,
} from "./state.js";
import { EventStreamClient } from "./stream.js";
import type { EventPayload, SnapshotPayload, StreamEventName } from "./types.js";
import { ConsoleView } from "./view.js";

const CONFERENCE_ID = 1;

interface Renderer {
  render(model: ViewModel, status: string): void;
}

function startLive(api: GatewayApi, renderer: Renderer): void {
  let model = emptyModel();
  let status = "connecting";

  const repaint = () => renderer.render(model, status);

  const stream = new EventStreamClient(api.eventsUrl(), api.token ?? "", {
    onEvent: (event) => {
      let payload: unknown;
      try {
        payload = JSON.parse(event.data);
      } catch {
        // Unintelligible event: keep the stale view rather than guess.
        status = "schema mismatch";
        repaint();
        return;
      }
      if (event.name === "snapshot") {
        model = applySnapshot(payload as SnapshotPayload);
        repaint();
        return;
      }
      const result = applyStreamEvent(
        model,
        event.name as StreamEventName,
        payload as EventPayload,
      );
      if (result.resync) {
        // Sequence gap: drop resume state and reconnect for a snapshot.
        stream.resetResume();
        stream.stop();
        startLive(api, renderer);
        return;
      }
      model = result.model;
      repaint();
    },
    onStatus: (s) => {
      status = s;
      repaint();
    },
  });
  stream.start();
  repaint();
}

function landing(root: HTMLElement): void {
  root.replaceChildren();
  const box = document.createElement("div");
  box.className = "landing";
  box.innerHTML = `
    <h1>Floor control</h1>
    <div class="landing-row">
      <h2>Chair console</h2>
      <input id="chair-token" type="password" placeholder="chair token">
      <button id="chair-go">Open console</button>
    </div>
    <div class="landing-row">
      <h2>Participant</h2>
      <input id="join-name" placeholder="display name">
      <button id="join-go">Join</button>
    </div>
    <p id="landing-error" class="error-banner" hidden></p>
  `;
  root.append(box);

  const fail = (message: string) => {
    const p = box.querySelector("#landing-error") as HTMLElement;
    p.hidden = false;
    p.textContent = message;
  };

  box.querySelector("#chair-go")!.addEventListener("click", () => {
    const token = (box.querySelector("#chair-token") as HTMLInputElement).value.trim();
    if (!token) return fail("token required");
    const api = new GatewayApi(CONFERENCE_ID, token);
    startLive(api, new ConsoleView(root, api));
  });

  box.querySelector("#join-go")!.addEventListener("click", async () => {
    const name = (box.querySelector("#join-name") as HTMLInputElement).value.trim();
    if (!name) return fail("display name required");
    try {
      const anonymous = new GatewayApi(CONFERENCE_ID, null);
      const joined = await anonymous.join(name);
      const api = new GatewayApi(CONFERENCE_ID, joined.token);
      startLive(
        api,
        new ParticipantView(root, api, joined.user_id, joined.display_name),
      );
    } catch (failure) {
      fail(String(failure));
    }
  });
}

landing(document.getElementById("app")!);
