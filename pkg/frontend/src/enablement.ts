/**
 * Pure view logic: which operation buttons are live, and whether the
 * feed has gone stale. The console holds zero workflow logic: validity
 * comes embedded in the snapshot, and the server re-validates anyway.
 */

import type { Snapshot } from "./protocol.js";

export function operationEnabled(
  snapshot: Snapshot | null,
  branch: string,
  operation: string,
): boolean {
  if (!snapshot) return false;
  const view = snapshot.branches[branch];
  if (!view) return false;
  return view.operations[operation] === true;
}

export function branchOperations(
  snapshot: Snapshot | null,
  branch: string,
): [string, boolean][] {
  if (!snapshot) return [];
  const view = snapshot.branches[branch];
  if (!view) return [];
  return Object.entries(view.operations).sort(([a], [b]) => a.localeCompare(b));
}

/** Stale when no snapshot arrived for more than `periods` snapshot periods. */
export function isStale(
  lastArrivalMs: number | null,
  nowMs: number,
  snapshotPeriodMs: number,
  periods = 3,
): boolean {
  if (lastArrivalMs === null) return true;
  return nowMs - lastArrivalMs > periods * snapshotPeriodMs;
}
