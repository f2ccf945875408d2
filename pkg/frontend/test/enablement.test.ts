import { describe, expect, it } from "vitest";
import { branchOperations, isStale, operationEnabled } from "../src/enablement.js";
import type { Snapshot } from "../src/protocol.js";

function snapshotAt(registration: string): Snapshot {
  return {
    seq: 1,
    time: 0,
    branches: {
      registration: {
        digits: registration,
        operations: {
          plan: registration === "000",
          register: registration === "110",
          place: registration === "111",
        },
      },
    },
    flags: {},
    transitions: [],
    avg_residual: null,
    pose_errors: [],
    armed_fault: null,
  };
}

describe("operationEnabled", () => {
  it("register is disabled at the initial state, plan enabled", () => {
    const snapshot = snapshotAt("000");
    expect(operationEnabled(snapshot, "registration", "register")).toBe(false);
    expect(operationEnabled(snapshot, "registration", "plan")).toBe(true);
  });

  it("register is enabled once landmarks are digitized", () => {
    expect(operationEnabled(snapshotAt("110"), "registration", "register")).toBe(true);
  });

  it("disconnected (no snapshot) disables everything", () => {
    expect(operationEnabled(null, "registration", "plan")).toBe(false);
  });

  it("unknown branches and operations are disabled", () => {
    const snapshot = snapshotAt("000");
    expect(operationEnabled(snapshot, "ghost", "plan")).toBe(false);
    expect(operationEnabled(snapshot, "registration", "ghost")).toBe(false);
  });

  it("is a pure function of the snapshot", () => {
    const snapshot = snapshotAt("110");
    const first = operationEnabled(snapshot, "registration", "register");
    const second = operationEnabled(snapshot, "registration", "register");
    expect(first).toBe(second);
  });
});

describe("branchOperations", () => {
  it("lists operations sorted with enablement", () => {
    expect(branchOperations(snapshotAt("111"), "registration")).toEqual([
      ["place", true],
      ["plan", false],
      ["register", false],
    ]);
  });
});

describe("isStale", () => {
  it("is stale before any snapshot arrives", () => {
    expect(isStale(null, 1000, 50)).toBe(true);
  });

  it("turns stale after three snapshot periods", () => {
    expect(isStale(1000, 1000 + 3 * 50, 50)).toBe(false);
    expect(isStale(1000, 1000 + 3 * 50 + 1, 50)).toBe(true);
  });
});
