// Pure view-model: the rendered queue is exactly what the server sent.
// Every stream event carries the post-change queue of its floor, so applying
// an event means replacing that floor's list; nothing is ever mutated
// optimistically on button clicks.

import type {
  EventPayload,
  FloorPolicy,
  QueueEntry,
  SnapshotPayload,
  StreamEventName,
} from "./types.js";

export interface FloorView {
  floorId: number;
  floorName: string;
  policy: FloorPolicy | null;
  requests: QueueEntry[];
}

export interface ViewModel {
  seq: number;
  floors: Map<number, FloorView>;
  synced: boolean;
}

export type CardColor = "green" | "amber" | "neutral" | "red" | "gray";

const STATE_COLORS: Record<string, CardColor> = {
  granted: "green",
  accepted: "amber",
  pending: "neutral",
  revoked: "red",
  denied: "gray",
  cancelled: "gray",
  released: "gray",
};

export function colorFor(state: string): CardColor {
  return STATE_COLORS[state] ?? "gray";
}

export function emptyModel(): ViewModel {
  return { seq: 0, floors: new Map(), synced: false };
}

export function applySnapshot(payload: SnapshotPayload): ViewModel {
  const floors = new Map<number, FloorView>();
  for (const floor of payload.floors) {
    floors.set(floor.floor_id, {
      floorId: floor.floor_id,
      floorName: floor.floor_name,
      policy: floor.policy,
      requests: floor.requests,
    });
  }
  return { seq: payload.seq, floors, synced: true };
}

export interface ApplyResult {
  model: ViewModel;
  /** Event sequence had a gap: the caller must refetch a snapshot. */
  resync: boolean;
  /** The request the event was about, when it named one. */
  changed: QueueEntry | null;
}

export function applyStreamEvent(
  model: ViewModel,
  name: StreamEventName,
  payload: EventPayload,
): ApplyResult {
  if (payload.seq <= model.seq) {
    // Duplicate delivery (e.g. replay overlap after resume): drop.
    return { model, resync: false, changed: null };
  }
  if (model.synced && payload.seq > model.seq + 1) {
    return { model, resync: true, changed: null };
  }
  const existing = model.floors.get(payload.floor_id);
  const updated: FloorView = {
    floorId: payload.floor_id,
    floorName: existing?.floorName ?? `floor-${payload.floor_id}`,
    policy: name === "policy" && payload.policy ? payload.policy : existing?.policy ?? null,
    requests: payload.queue,
  };
  const floors = new Map(model.floors);
  floors.set(payload.floor_id, updated);
  return {
    model: { seq: payload.seq, floors, synced: model.synced },
    resync: false,
    changed: payload.request ?? null,
  };
}

export function floorList(model: ViewModel): FloorView[] {
  return [...model.floors.values()].sort((a, b) => a.floorId - b.floorId);
}

export function findOwnRequest(
  model: ViewModel,
  floorId: number,
  userId: number,
): QueueEntry | null {
  const floor = model.floors.get(floorId);
  if (!floor) return null;
  const live = ["pending", "accepted", "granted"];
  for (const entry of floor.requests) {
    if (entry.user_id === userId && live.includes(entry.state)) return entry;
  }
  return null;
}
