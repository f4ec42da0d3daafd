/**
 * Static-file server plus TCP-to-HTTP relay for the browser console.
 *
 * - `GET /` and static assets serve the console app.
 * - `GET /stream` opens a TCP connection to the guidance server and
 *   relays its ndjson records verbatim as a chunked HTTP response.
 * - `POST /command` forwards the request body verbatim as one command
 *   line on that client's TCP connection.
 *
 * The relay adds and interprets nothing; the browser sees the wire
 * protocol unchanged. Usage:
 *   node dist/bridge.js [--port 8080] [--server-host H] [--server-port P]
 */

import * as fs from "node:fs";
import * as http from "node:http";
import * as net from "node:net";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

const here = path.dirname(fileURLToPath(import.meta.url));
const root = path.resolve(here, "..");

function arg(name: string, fallback: string): string {
  const i = process.argv.indexOf(`--${name}`);
  return i >= 0 && process.argv[i + 1] ? process.argv[i + 1]! : fallback;
}

const httpPort = Number(arg("port", "8080"));
const serverHost = arg("server-host", "127.0.0.1");
const serverPort = Number(arg("server-port", "9000"));

interface Relay {
  sock: net.Socket;
}

const relays = new Map<string, Relay>();

const MIME: Record<string, string> = {
  ".html": "text/html",
  ".js": "text/javascript",
  ".css": "text/css",
  ".json": "application/json",
};

function serveStatic(url: string, res: http.ServerResponse): void {
  const rel = url === "/" ? "index.html" : url.replace(/^\//, "");
  const file = path.join(root, rel);
  if (!file.startsWith(root) || !fs.existsSync(file) || fs.statSync(file).isDirectory()) {
    res.writeHead(404).end("not found");
    return;
  }
  res.writeHead(200, { "content-type": MIME[path.extname(file)] ?? "application/octet-stream" });
  fs.createReadStream(file).pipe(res);
}

const server = http.createServer((req, res) => {
  const url = new URL(req.url ?? "/", "http://localhost");
  if (req.method === "GET" && url.pathname === "/stream") {
    const key = url.searchParams.get("client") ?? "default";
    const sock = net.createConnection({ host: serverHost, port: serverPort });
    relays.set(key, { sock });
    res.writeHead(200, {
      "content-type": "application/x-ndjson",
      "cache-control": "no-store",
    });
    sock.pipe(res);
    const drop = () => {
      relays.delete(key);
      sock.destroy();
      res.end();
    };
    sock.on("error", drop);
    sock.on("close", drop);
    req.on("close", drop);
    return;
  }
  if (req.method === "POST" && url.pathname === "/command") {
    const key = url.searchParams.get("client") ?? "default";
    let body = "";
    req.on("data", (c) => (body += c));
    req.on("end", () => {
      const relay = relays.get(key);
      if (!relay) {
        res.writeHead(409).end("no active stream");
        return;
      }
      relay.sock.write(body.trimEnd() + "\n");
      res.writeHead(204).end();
    });
    return;
  }
  if (req.method === "GET") {
    serveStatic(url.pathname, res);
    return;
  }
  res.writeHead(405).end();
});

server.listen(httpPort, () => {
  console.log(
    `console at http://127.0.0.1:${httpPort}/ ` +
    `(relaying ${serverHost}:${serverPort})`,
  );
});
