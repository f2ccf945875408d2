/**
 * Node-side bridge client: one TCP connection to the engine, snapshots
 * in, framed commands out. Used by the scripted session runner, the
 * relay, and the tests.
 */

import net from "node:net";
import { EventEmitter } from "node:events";
import { SnapshotStream, frameCommand, type Snapshot } from "./protocol.js";

export interface BridgeClientEvents {
  snapshot: (snapshot: Snapshot) => void;
  close: () => void;
  error: (err: Error) => void;
}

export class BridgeClient extends EventEmitter {
  private socket: net.Socket | null = null;
  private stream = new SnapshotStream();
  latest: Snapshot | null = null;
  lastArrivalMs: number | null = null;

  connect(host: string, port: number, timeoutMs = 5000): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new Error(`connect timeout to ${host}:${port}`));
      }, timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        this.socket = socket;
        resolve();
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        this.emit("error", err);
        reject(err);
      });
      socket.on("data", (chunk) => {
        for (const snapshot of this.stream.push(chunk.toString("utf8"))) {
          this.latest = snapshot;
          this.lastArrivalMs = Date.now();
          this.emit("snapshot", snapshot);
        }
      });
      socket.on("close", () => this.emit("close"));
    });
  }

  send(name: string, values: number[] = []): void {
    if (!this.socket) throw new Error("not connected");
    this.socket.write(frameCommand(name, values));
  }

  /** Resolve with the first snapshot satisfying the predicate. */
  waitFor(predicate: (s: Snapshot) => boolean, timeoutMs = 5000): Promise<Snapshot> {
    return new Promise((resolve, reject) => {
      if (this.latest && predicate(this.latest)) {
        resolve(this.latest);
        return;
      }
      const timer = setTimeout(() => {
        this.off("snapshot", onSnapshot);
        reject(new Error(`timeout after ${timeoutMs} ms waiting for condition`));
      }, timeoutMs);
      const onSnapshot = (snapshot: Snapshot) => {
        if (predicate(snapshot)) {
          clearTimeout(timer);
          this.off("snapshot", onSnapshot);
          resolve(snapshot);
        }
      };
      this.on("snapshot", onSnapshot);
    });
  }

  close(): void {
    this.socket?.destroy();
    this.socket = null;
  }
}
