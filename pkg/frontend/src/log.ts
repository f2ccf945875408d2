/**
 * Verdict log built from snapshot transition tails. Snapshots overlap
 * (each carries the last N records), so entries are deduplicated by
 * sequence number; order is the server's. Every verdict appears exactly
 * once, in order.
 */

import type { Snapshot, TransitionEntry } from "./protocol.js";

export class VerdictLog {
  private seen = new Set<number>();
  readonly entries: TransitionEntry[] = [];

  /** Absorb a snapshot; returns the entries that are new. */
  absorb(snapshot: Snapshot): TransitionEntry[] {
    const fresh: TransitionEntry[] = [];
    for (const entry of snapshot.transitions) {
      if (this.seen.has(entry.seq)) continue;
      this.seen.add(entry.seq);
      fresh.push(entry);
    }
    fresh.sort((a, b) => a.seq - b.seq);
    this.entries.push(...fresh);
    return fresh;
  }

  get commandVerdicts(): TransitionEntry[] {
    return this.entries.filter((e) => e.trigger === "command");
  }
}
