/** Server-sent events subscription over a streamed fetch response. */

import type { FetchLike } from "./api.js";

export type EventHandler = (name: string, payload: unknown) => void;

export interface EventStream {
  close(): void;
  done: Promise<void>;
}

/** Split one SSE block into its event name and parsed data payload. */
function parseBlock(block: string): { name: string; data: string } | null {
  let name = "message";
  const dataLines: string[] = [];
  for (const line of block.split("\n")) {
    if (line.startsWith(":")) {
      continue;
    }
    if (line.startsWith("event:")) {
      name = line.slice("event:".length).trim();
    } else if (line.startsWith("data:")) {
      dataLines.push(line.slice("data:".length).trim());
    }
  }
  if (dataLines.length === 0) {
    return null;
  }
  return { name, data: dataLines.join("\n") };
}

/**
 * Open the event stream and dispatch every complete event block to
 * `onEvent` as (name, parsed JSON payload).  Comment-only blocks such as
 * keep-alives are ignored.  `close()` aborts the underlying request.
 */
export function subscribeEvents(
  url: string,
  onEvent: EventHandler,
  fetchImpl: FetchLike = fetch,
  onError?: (err: unknown) => void,
): EventStream {
  const controller = new AbortController();

  const done = (async () => {
    const response = await fetchImpl(url, { signal: controller.signal });
    if (!response.ok || response.body === null) {
      throw new Error(`event stream failed: HTTP ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done: eof, value } = await reader.read();
      if (eof) {
        break;
      }
      buffer += decoder.decode(value, { stream: true }).replace(/\r\n/g, "\n");
      for (;;) {
        const split = buffer.indexOf("\n\n");
        if (split < 0) {
          break;
        }
        const block = buffer.slice(0, split);
        buffer = buffer.slice(split + 2);
        const parsed = parseBlock(block);
        if (parsed !== null) {
          onEvent(parsed.name, JSON.parse(parsed.data));
        }
      }
    }
  })().catch((err: unknown) => {
    if (!controller.signal.aborted && onError) {
      onError(err);
    }
  });

  return {
    close: () => controller.abort(),
    done,
  };
}
