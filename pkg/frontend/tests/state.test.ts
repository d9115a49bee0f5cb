// View-model reducer tests, driven by an event stream recorded from a live
// daemon running the reference two-locals-one-remote call flow.

import { describe, expect, it } from "vitest";
import fixture from "./fixtures/golden-events.json";
import {
  applySnapshot,
  applyStreamEvent,
  colorFor,
  emptyModel,
  findOwnRequest,
  floorList,
  type ViewModel,
} from "../src/state.js";
import type { EventPayload, SnapshotPayload, StreamEventName } from "../src/types.js";

interface FixtureEvent {
  name: string;
  id: number;
  data: any;
}

const events = fixture.events as FixtureEvent[];

function replay(all: FixtureEvent[]): ViewModel {
  let model = emptyModel();
  for (const event of all) {
    if (event.name === "snapshot") {
      model = applySnapshot(event.data as SnapshotPayload);
      continue;
    }
    const result = applyStreamEvent(
      model,
      event.name as StreamEventName,
      event.data as EventPayload,
    );
    expect(result.resync).toBe(false);
    model = result.model;
  }
  return model;
}

describe("golden flow convergence", () => {
  it("replaying the stream reproduces the final queue exactly", () => {
    const model = replay(events);
    const floor = model.floors.get(1)!;
    expect(floor.requests).toEqual(fixture.final_queue.requests);
  });

  it("final card order and colors match the reference walkthrough", () => {
    const model = replay(events);
    const cards = model.floors.get(1)!.requests.map((entry) => ({
      name: entry.display_name,
      state: entry.state,
      color: colorFor(entry.state),
    }));
    expect(cards).toEqual([
      { name: "spromano", state: "revoked", color: "red" },
      { name: "User2", state: "granted", color: "green" },
      { name: "User1", state: "pending", color: "neutral" },
    ]);
  });

  it("policy event updates the floor policy", () => {
    const model = replay(events);
    expect(model.floors.get(1)!.policy).toEqual({
      max_granted: 2,
      auto_grant: false,
    });
  });

  it("every intermediate state keeps positions dense over waiting entries", () => {
    let model = emptyModel();
    for (const event of events) {
      if (event.name === "snapshot") {
        model = applySnapshot(event.data);
        continue;
      }
      model = applyStreamEvent(model, event.name as StreamEventName, event.data).model;
      for (const floor of floorList(model)) {
        const waiting = floor.requests
          .filter((entry) => entry.state === "pending" || entry.state === "accepted")
          .map((entry) => entry.position)
          .sort((a, b) => a - b);
        expect(waiting).toEqual(waiting.map((_, i) => i + 1));
      }
    }
  });
});

describe("sequence handling", () => {
  it("duplicate events are dropped", () => {
    const model = replay(events);
    const last = events[events.length - 1];
    const result = applyStreamEvent(model, last.name as StreamEventName, last.data);
    expect(result.resync).toBe(false);
    expect(result.model).toBe(model);
  });

  it("a sequence gap demands a resync", () => {
    let model = applySnapshot(events[0].data);
    const future = { ...events[3].data, seq: model.seq + 5 };
    const result = applyStreamEvent(model, "state", future);
    expect(result.resync).toBe(true);
    expect(result.model).toBe(model);
  });

  it("mid-stream reconnect (snapshot refetch) still converges", () => {
    // Apply the first half, then simulate a reconnect by snapshotting the
    // state the server would report, then apply the rest.
    const half = Math.floor(events.length / 2);
    let model = replay(events.slice(0, half));
    const resnapshot: SnapshotPayload = {
      seq: model.seq,
      floors: floorList(model).map((floor) => ({
        floor_id: floor.floorId,
        floor_name: floor.floorName,
        policy: floor.policy!,
        requests: floor.requests,
      })),
    };
    model = applySnapshot(resnapshot);
    for (const event of events.slice(half)) {
      model = applyStreamEvent(model, event.name as StreamEventName, event.data).model;
    }
    expect(model.floors.get(1)!.requests).toEqual(fixture.final_queue.requests);
  });
});

describe("participant helpers", () => {
  it("findOwnRequest sees only live requests", () => {
    const model = replay(events);
    // spromano (user 102) ended revoked: not live.
    expect(findOwnRequest(model, 1, 102)).toBeNull();
    // User1 (user 101) is still pending.
    expect(findOwnRequest(model, 1, 101)?.state).toBe("pending");
    // User2 (user 103) holds the floor.
    expect(findOwnRequest(model, 1, 103)?.state).toBe("granted");
  });
});
