/**
 * Bridge wire protocol, mirroring the engine's documented formats.
 *
 * Outbound (engine -> console): newline-delimited JSON state snapshots.
 * Inbound (console -> engine): command packets, each a 16-byte ASCII
 * header right-padded with '_' followed by comma-separated %.6f values,
 * prefixed with a 4-digit ASCII decimal byte length.
 */

export const HEADER_LENGTH = 16;
export const LENGTH_PREFIX = 4;
const HEADER_RE = /^[A-Z0-9_]+$/;

export interface TransitionEntry {
  seq: number;
  branch: string;
  from: string;
  to: string;
  operation: string;
  outcome: string;
  trigger: string;
  timestamp: number;
  cascade: unknown[];
  detail: unknown;
}

export interface BranchView {
  digits: string;
  operations: Record<string, boolean>;
}

export interface Snapshot {
  seq: number;
  time: number;
  branches: Record<string, BranchView>;
  flags: Record<string, boolean>;
  transitions: TransitionEntry[];
  avg_residual: number | null;
  pose_errors: [number, number][];
  armed_fault: Record<string, unknown> | null;
  last_rejected_command?: { name: string; reason: string };
}

/** Render one command packet (header + payload, no length prefix). */
export function encodeCommand(name: string, values: number[] = []): string {
  if (name.length === 0) throw new Error("command name is empty");
  if (name.length > HEADER_LENGTH) {
    throw new Error(`command name ${name} exceeds ${HEADER_LENGTH} characters`);
  }
  if (!HEADER_RE.test(name)) {
    throw new Error(`command name ${name} uses illegal characters`);
  }
  if (name.endsWith("_")) {
    throw new Error(`command name ${name} must not end with the pad character`);
  }
  for (const v of values) {
    if (!Number.isFinite(v)) throw new Error(`non-finite payload value ${v}`);
  }
  const header = name.padEnd(HEADER_LENGTH, "_");
  const body = values.map((v) => v.toFixed(6)).join(",");
  return header + body;
}

/** Length-prefix a packet for the bridge stream. */
export function frameCommand(name: string, values: number[] = []): Uint8Array {
  const packet = encodeCommand(name, values);
  if (packet.length > 9999) throw new Error("frame too large for 4-digit prefix");
  const prefix = packet.length.toString().padStart(LENGTH_PREFIX, "0");
  return new TextEncoder().encode(prefix + packet);
}

/**
 * Incremental splitter for the snapshot stream. Feed raw chunks, get
 * complete parsed snapshots; partial lines are buffered.
 */
export class SnapshotStream {
  private buffer = "";

  push(chunk: string): Snapshot[] {
    this.buffer += chunk;
    const out: Snapshot[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 1);
      if (!line.trim()) continue;
      out.push(parseSnapshot(line));
    }
    return out;
  }
}

export function parseSnapshot(line: string): Snapshot {
  const data = JSON.parse(line);
  if (typeof data.seq !== "number" || typeof data.branches !== "object") {
    throw new Error("snapshot missing seq/branches");
  }
  return {
    seq: data.seq,
    time: data.time ?? 0,
    branches: data.branches ?? {},
    flags: data.flags ?? {},
    transitions: data.transitions ?? [],
    avg_residual: data.avg_residual ?? null,
    pose_errors: data.pose_errors ?? [],
    armed_fault: data.armed_fault ?? null,
    last_rejected_command: data.last_rejected_command,
  };
}
