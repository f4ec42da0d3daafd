/** Node TCP transport speaking the server's ndjson protocol directly. */

import * as net from "node:net";

import type { Transport, TransportFactory, TransportHandlers } from "./session.js";

export function tcpTransportFactory(host: string, port: number): TransportFactory {
  return (handlers: TransportHandlers): Transport => {
    const sock = net.createConnection({ host, port });
    let buf = "";
    sock.setEncoding("utf-8");
    sock.on("connect", () => handlers.onOpen());
    sock.on("data", (chunk: string) => {
      buf += chunk;
      let idx;
      while ((idx = buf.indexOf("\n")) >= 0) {
        const line = buf.slice(0, idx);
        buf = buf.slice(idx + 1);
        if (line.trim()) handlers.onLine(line);
      }
    });
    sock.on("error", () => {
      /* close follows; reconnect handles it */
    });
    sock.on("close", () => handlers.onClose());
    return {
      send: (line: string) => sock.write(line + "\n"),
      close: () => sock.destroy(),
    };
  };
}
