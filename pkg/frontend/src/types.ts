// JSON shapes exchanged with the gateway. Field names are part of the API
// contract and must not be renamed here.

export interface QueueEntry {
  request_id: number;
  floor_id: number;
  user_id: number;
  display_name: string;
  origin: string;
  priority: string;
  state: string;
  position: number;
}

export interface FloorPolicy {
  max_granted: number;
  auto_grant: boolean;
}

export interface FloorSnapshot {
  floor_id: number;
  floor_name: string;
  policy: FloorPolicy;
  requests: QueueEntry[];
}

export interface SnapshotPayload {
  seq: number;
  floors: FloorSnapshot[];
}

export interface EventPayload {
  seq: number;
  floor_id: number;
  queue: QueueEntry[];
  request?: QueueEntry | null;
  old_state?: string | null;
  new_state?: string | null;
  policy?: FloorPolicy;
}

export type StreamEventName = "snapshot" | "state" | "reorder" | "policy";

export interface ChairCommand {
  action: string;
  request_id?: number;
  floor_id?: number;
  priority?: string;
  policy?: FloorPolicy;
  command_id?: string;
}

export interface JoinResponse {
  user_id: number;
  token: string;
  display_name: string;
}
