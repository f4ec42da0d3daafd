/**
 * Browser transport over the bridge's HTTP endpoints.
 *
 * Browsers cannot open raw TCP sockets, so `bridge.ts` relays the
 * server's ndjson stream verbatim at `GET /stream` (chunked) and
 * forwards command lines verbatim from `POST /command`. Records are
 * untouched in both directions.
 */

import type { Transport, TransportFactory, TransportHandlers } from "./session.js";

export function streamTransportFactory(baseUrl: string): TransportFactory {
  return (handlers: TransportHandlers): Transport => {
    const controller = new AbortController();
    let open = true;

    (async () => {
      try {
        const resp = await fetch(`${baseUrl}/stream`, {
          signal: controller.signal,
        });
        if (!resp.ok || !resp.body) throw new Error(`stream: ${resp.status}`);
        handlers.onOpen();
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buf = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buf += decoder.decode(value, { stream: true });
          let idx;
          while ((idx = buf.indexOf("\n")) >= 0) {
            const line = buf.slice(0, idx);
            buf = buf.slice(idx + 1);
            if (line.trim()) handlers.onLine(line);
          }
        }
      } catch {
        /* fall through to close */
      }
      if (open) {
        open = false;
        handlers.onClose();
      }
    })();

    return {
      send: (line: string) => {
        void fetch(`${baseUrl}/command`, { method: "POST", body: line });
      },
      close: () => {
        open = false;
        controller.abort();
      },
    };
  };
}
