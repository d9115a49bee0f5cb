// text/event-stream consumption over fetch. The native EventSource cannot
// send an Authorization header, so we parse the stream ourselves and run our
// own reconnect loop (with Last-Event-ID, so the server replays what the
// connection missed).

export interface SseEvent {
  name: string;
  id: string | null;
  data: string;
}

export type StreamStatus = "connecting" | "open" | "closed";

/** Incremental parser; feed arbitrary chunks, get dispatched events. */
export function createSseParser(onEvent: (event: SseEvent) => void) {
  let buffer = "";
  let name = "message";
  let id: string | null = null;
  let data: string[] = [];

  const dispatch = () => {
    if (data.length > 0 || name !== "message") {
      onEvent({ name, id, data: data.join("\n") });
    }
    name = "message";
    data = [];
  };

  return (chunk: string) => {
    buffer += chunk;
    let newline;
    while ((newline = buffer.indexOf("\n")) >= 0) {
      let line = buffer.slice(0, newline);
      buffer = buffer.slice(newline + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      if (line === "") {
        dispatch();
        continue;
      }
      if (line.startsWith(":")) continue; // heartbeat comment
      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      let value = colon < 0 ? "" : line.slice(colon + 1);
      if (value.startsWith(" ")) value = value.slice(1);
      if (field === "event") name = value;
      else if (field === "id") id = value;
      else if (field === "data") data.push(value);
    }
  };
}

export interface StreamHandlers {
  onEvent: (event: SseEvent) => void;
  onStatus?: (status: StreamStatus) => void;
}

const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 8000;

export class EventStreamClient {
  private stopped = false;
  private lastEventId: string | null = null;
  private controller: AbortController | null = null;

  constructor(
    private url: string,
    private token: string,
    private handlers: StreamHandlers,
    private fetchImpl: typeof fetch = fetch,
    private sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((resolve) => setTimeout(resolve, ms)),
  ) {}

  start(): void {
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  /** Kill the current connection only; the loop reconnects and resumes. */
  dropConnection(): void {
    this.controller?.abort();
  }

  /** Forget the resume position; the next connect gets a fresh snapshot. */
  resetResume(): void {
    this.lastEventId = null;
  }

  private async loop(): Promise<void> {
    let backoff = BACKOFF_START_MS;
    while (!this.stopped) {
      this.handlers.onStatus?.("connecting");
      try {
        await this.consumeOnce(() => {
          backoff = BACKOFF_START_MS;
          this.handlers.onStatus?.("open");
        });
      } catch {
        // fall through to reconnect
      }
      if (this.stopped) break;
      this.handlers.onStatus?.("closed");
      await this.sleep(backoff);
      backoff = Math.min(backoff * 2, BACKOFF_MAX_MS);
    }
    this.handlers.onStatus?.("closed");
  }

  private async consumeOnce(onOpen: () => void): Promise<void> {
    this.controller = new AbortController();
    const headers: Record<string, string> = {
      Authorization: `Bearer ${this.token}`,
      Accept: "text/event-stream",
    };
    if (this.lastEventId !== null) headers["Last-Event-ID"] = this.lastEventId;
    const response = await this.fetchImpl(this.url, {
      headers,
      signal: this.controller.signal,
    });
    if (!response.ok || !response.body) {
      throw new Error(`stream failed: ${response.status}`);
    }
    onOpen();
    const parse = createSseParser((event) => {
      if (event.id !== null) this.lastEventId = event.id;
      this.handlers.onEvent(event);
    });
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      parse(decoder.decode(value, { stream: true }));
    }
    throw new Error("stream ended");
  }
}
