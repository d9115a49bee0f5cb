// Participant page: one request/release pair per floor plus a banner that
// says plainly whether you may speak. Buttons reflect the live queue only.

import { ApiFailure, GatewayApi } from "./api.js";
import { findOwnRequest, floorList, type ViewModel } from "./state.js";

export class ParticipantView {
  private error = "";

  constructor(
    private root: HTMLElement,
    private api: GatewayApi,
    private userId: number,
    private displayName: string,
  ) {}

  render(model: ViewModel, status: string): void {
    this.root.replaceChildren();
    const header = document.createElement("div");
    header.className = "console-header";
    const title = document.createElement("h1");
    title.textContent = `Hello, ${this.displayName}`;
    const conn = document.createElement("span");
    conn.className = `conn conn-${status}`;
    conn.textContent = status;
    header.append(title, conn);
    this.root.append(header);

    const granted = floorList(model).some(
      (floor) => findOwnRequest(model, floor.floorId, this.userId)?.state === "granted",
    );
    const banner = document.createElement("div");
    banner.className = granted ? "speak-banner speak-on" : "speak-banner speak-off";
    banner.textContent = granted
      ? "You have the floor — speak now"
      : "You do not have the floor";
    this.root.append(banner);

    if (this.error) {
      const err = document.createElement("div");
      err.className = "error-banner";
      err.textContent = this.error;
      this.root.append(err);
    }

    for (const floor of floorList(model)) {
      const own = findOwnRequest(model, floor.floorId, this.userId);
      const section = document.createElement("section");
      section.className = "floor";
      const h2 = document.createElement("h2");
      h2.textContent = `${floor.floorName} (#${floor.floorId})`;
      section.append(h2);

      const line = document.createElement("div");
      line.className = "own-state";
      line.textContent = own
        ? `your request: ${own.state}` +
          (own.position > 0 ? ` (position ${own.position})` : "")
        : "no request";
      section.append(line);

      const actions = document.createElement("div");
      actions.className = "card-actions";
      actions.append(
        this.actionButton("Request", own !== null, () =>
          this.api.floorAction("request", floor.floorId),
        ),
        this.actionButton("Release", own === null, () =>
          this.api.floorAction("release", floor.floorId),
        ),
      );
      section.append(actions);
      this.root.append(section);
    }
  }

  private actionButton(
    label: string,
    disabled: boolean,
    action: () => Promise<unknown>,
  ): HTMLButtonElement {
    const node = document.createElement("button");
    node.textContent = label;
    node.disabled = disabled;
    node.addEventListener("click", () => {
      node.disabled = true;
      action()
        .then(() => {
          this.error = "";
        })
        .catch((failure) => {
          this.error =
            failure instanceof ApiFailure
              ? `${failure.status} ${failure.code}`
              : String(failure);
        });
    });
    return node;
  }
}
