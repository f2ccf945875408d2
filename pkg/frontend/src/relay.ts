/**
 * Browser relay: serves the console page and bridges HTTP to the
 * engine's TCP bridge, since browsers cannot open raw sockets.
 *
 *   GET  /                    console page and modules (dist/web)
 *   GET  /events?host=&port=  Server-Sent Events stream of snapshots
 *   POST /command?host=&port= {"name": "...", "values": [...]} frame
 *
 * Engine host/port default to the relay flags; query parameters
 * override per request (the page passes its own URL query through).
 *
 * Usage: node dist/relay.js [--http-port 8080]
 *        [--engine-host 127.0.0.1] [--engine-port 47002]
 */

import http from "node:http";
import net from "node:net";
import { readFileSync, existsSync } from "node:fs";
import { dirname, join, normalize } from "node:path";
import { fileURLToPath } from "node:url";
import { frameCommand } from "./protocol.js";

// dist/relay.js serves dist/web; when run from source (tests), fall
// back to the built tree
const _here = dirname(fileURLToPath(import.meta.url));
const _candidates = [join(_here, "web"), join(_here, "..", "dist", "web")];
const WEB_ROOT = _candidates.find((p) => existsSync(p)) ?? _candidates[0];

interface Flags {
  httpPort: number;
  engineHost: string;
  enginePort: number;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = { httpPort: 8080, engineHost: "127.0.0.1", enginePort: 47002 };
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (key === "--http-port") flags.httpPort = parseInt(value, 10);
    else if (key === "--engine-host") flags.engineHost = value;
    else if (key === "--engine-port") flags.enginePort = parseInt(value, 10);
    else throw new Error(`unknown flag ${key}`);
  }
  return flags;
}

const MIME: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".js": "text/javascript; charset=utf-8",
  ".css": "text/css; charset=utf-8",
};

function engineTarget(url: URL, flags: Flags): { host: string; port: number } {
  return {
    host: url.searchParams.get("host") ?? flags.engineHost,
    port: parseInt(url.searchParams.get("port") ?? `${flags.enginePort}`, 10),
  };
}

export function startRelay(flags: Flags): Promise<http.Server> {
  const server = http.createServer((req, res) => {
    const url = new URL(req.url ?? "/", "http://relay");

    if (req.method === "GET" && url.pathname === "/events") {
      const target = engineTarget(url, flags);
      const upstream = net.createConnection(target, () => {
        res.writeHead(200, {
          "Content-Type": "text/event-stream",
          "Cache-Control": "no-cache",
          Connection: "keep-alive",
          "Access-Control-Allow-Origin": "*",
        });
      });
      let buffer = "";
      upstream.on("data", (chunk) => {
        buffer += chunk.toString("utf8");
        let idx: number;
        while ((idx = buffer.indexOf("\n")) >= 0) {
          const line = buffer.slice(0, idx);
          buffer = buffer.slice(idx + 1);
          if (line.trim()) res.write(`data: ${line}\n\n`);
        }
      });
      upstream.on("error", () => {
        if (!res.headersSent) res.writeHead(502);
        res.end();
      });
      upstream.on("close", () => res.end());
      req.on("close", () => upstream.destroy());
      return;
    }

    if (req.method === "POST" && url.pathname === "/command") {
      let body = "";
      req.on("data", (chunk) => (body += chunk));
      req.on("end", () => {
        let name: string;
        let values: number[];
        try {
          const parsed = JSON.parse(body || "{}");
          name = parsed.name;
          values = parsed.values ?? [];
          if (typeof name !== "string") throw new Error("missing command name");
        } catch (err) {
          res.writeHead(400, { "Content-Type": "application/json" });
          res.end(JSON.stringify({ ok: false, error: String(err) }));
          return;
        }
        const target = engineTarget(url, flags);
        const upstream = net.createConnection(target, () => {
          try {
            upstream.write(frameCommand(name, values), () => upstream.end());
            res.writeHead(200, { "Content-Type": "application/json" });
            res.end(JSON.stringify({ ok: true }));
          } catch (err) {
            res.writeHead(400, { "Content-Type": "application/json" });
            res.end(JSON.stringify({ ok: false, error: String(err) }));
          }
        });
        upstream.on("error", (err) => {
          if (!res.headersSent) {
            res.writeHead(502, { "Content-Type": "application/json" });
            res.end(JSON.stringify({ ok: false, error: String(err) }));
          }
        });
      });
      return;
    }

    // static console files
    const path = url.pathname === "/" ? "/index.html" : url.pathname;
    const file = normalize(join(WEB_ROOT, path));
    if (!file.startsWith(WEB_ROOT) || !existsSync(file)) {
      res.writeHead(404);
      res.end("not found");
      return;
    }
    const ext = file.slice(file.lastIndexOf("."));
    res.writeHead(200, { "Content-Type": MIME[ext] ?? "application/octet-stream" });
    res.end(readFileSync(file));
  });

  return new Promise((resolve) => {
    server.listen(flags.httpPort, "127.0.0.1", () => resolve(server));
  });
}

const isMain = process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (isMain) {
  const flags = parseFlags(process.argv.slice(2));
  startRelay(flags).then((server) => {
    const address = server.address() as net.AddressInfo;
    console.log(
      `console relay on http://127.0.0.1:${address.port}/ -> ` +
        `engine ${flags.engineHost}:${flags.enginePort}`,
    );
  });
}
