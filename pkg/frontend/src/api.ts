// Thin REST wrappers over the gateway. Errors surface as ApiFailure with the
// machine-readable code the server returned, for inline display on cards.

import type { ChairCommand, FloorSnapshot, JoinResponse } from "./types.js";

export class ApiFailure extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(detail || code);
  }
}

async function request<T>(
  method: string,
  path: string,
  token: string | null,
  body?: unknown,
): Promise<T> {
  const headers: Record<string, string> = {};
  if (token) headers["Authorization"] = `Bearer ${token}`;
  if (body !== undefined) headers["Content-Type"] = "application/json";
  const response = await fetch(path, {
    method,
    headers,
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  let payload: any = null;
  try {
    payload = await response.json();
  } catch {
    // non-JSON error body
  }
  if (!response.ok) {
    throw new ApiFailure(
      response.status,
      payload?.error ?? `http_${response.status}`,
      payload?.detail ?? response.statusText,
    );
  }
  return payload as T;
}

export class GatewayApi {
  constructor(
    public conferenceId: number,
    public token: string | null,
  ) {}

  private base(): string {
    return `/api/conf/${this.conferenceId}`;
  }

  eventsUrl(): string {
    return `${this.base()}/events`;
  }

  listFloors(): Promise<{ floors: { floor_id: number; floor_name: string }[] }> {
    return request("GET", `${this.base()}/floors`, this.token);
  }

  getQueue(floorId: number): Promise<FloorSnapshot> {
    return request("GET", `${this.base()}/floors/${floorId}/queue`, this.token);
  }

  chairCommand(command: ChairCommand): Promise<unknown> {
    return request("POST", `${this.base()}/chair/command`, this.token, command);
  }

  join(displayName: string): Promise<JoinResponse> {
    return request("POST", `${this.base()}/participants`, null, {
      display_name: displayName,
    });
  }

  floorAction(kind: "request" | "release", floorId: number): Promise<unknown> {
    return request("POST", `${this.base()}/floor-action`, this.token, {
      kind,
      floor_id: floorId,
    });
  }
}

export function commandId(): string {
  return `ui-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}
