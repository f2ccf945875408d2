/**
 * In-process stand-in for the engine bridge, for client tests without a
 * Python process: same wire format, simplified navigation semantics
 * (registration 000/100/110/111 with a one-digit digitization branch
 * and a pose-plan branch, count-checked digitization, residual-gated
 * registration).
 */

import net from "node:net";
import { HEADER_LENGTH, LENGTH_PREFIX } from "./protocol.js";

interface MockState {
  registration: string;
  digitization: string;
  pose_plan: string;
  digitized: number;
  posesPlanned: boolean;
  placements: [number, number][];
  residual: number | null;
  armedFault: { kind: string; landmark?: number } | null;
  faultSpent: boolean;
  seq: number;
  snapshotSeq: number;
  transitions: Record<string, unknown>[];
}

const LANDMARKS = 6;

function fresh(): MockState {
  return {
    registration: "000",
    digitization: "0",
    pose_plan: "0",
    digitized: 0,
    posesPlanned: false,
    placements: [],
    residual: null,
    armedFault: null,
    faultSpent: false,
    seq: 0,
    snapshotSeq: 0,
    transitions: [],
  };
}

function record(state: MockState, branch: string, operation: string,
                from: string, to: string, outcome: string, detail: unknown = null) {
  state.seq += 1;
  state.transitions.push({
    seq: state.seq,
    branch,
    from,
    to,
    operation,
    outcome,
    trigger: "command",
    timestamp: state.seq,
    cascade: [],
    detail,
  });
  if (state.transitions.length > 50) state.transitions.shift();
}

function dispatch(state: MockState, name: string, values: number[]): void {
  const reg = state.registration;
  switch (name) {
    case "PLAN_LANDMARKS":
      if (reg !== "000" && reg !== "100") {
        record(state, "registration", "plan", reg, reg, "RejectedInvalid");
        return;
      }
      state.registration = "100";
      state.digitization = "0";
      state.digitized = 0;
      record(state, "registration", "plan", reg, "100", "Accepted");
      return;
    case "DIGITIZE_POINT": {
      if (reg !== "100" && reg !== "110") {
        record(state, "digitization", "digitize", state.digitization,
               state.digitization, "RejectedInvalid", "branch inactive");
        return;
      }
      if (state.digitization !== "0") {
        record(state, "digitization", "digitize", "1", "1", "RejectedInvalid");
        return;
      }
      const fault = state.armedFault;
      if (fault?.kind === "MissingLandmark" && !state.faultSpent &&
          fault.landmark === state.digitized + 1) {
        state.faultSpent = true; // measurement never taken
      } else {
        state.digitized += 1;
      }
      record(state, "digitization", "digitize", "0", "0", "Accepted");
      return;
    }
    case "ALL_DIGITIZED": {
      if (reg !== "100" || state.digitization !== "0") {
        record(state, "digitization", "all_digitized", state.digitization,
               state.digitization, "RejectedInvalid");
        return;
      }
      if (state.digitized !== LANDMARKS) {
        record(state, "digitization", "all_digitized", "0", "0",
               "RejectedStepFailure",
               { failed_step: "check_digitization_complete",
                 reason: `${state.digitized}/${LANDMARKS} landmarks digitized` });
        return;
      }
      state.digitization = "1";
      state.registration = "110";
      record(state, "digitization", "all_digitized", "0", "1", "Accepted");
      return;
    }
    case "REGISTRATION_REG": {
      if (reg !== "110") {
        record(state, "registration", "register", reg, reg, "RejectedInvalid",
               `operation invalid at state '${reg}'`);
        return;
      }
      const residual =
        state.armedFault?.kind === "LargeDigitizationError" ? 7.43 : 1.92;
      state.residual = residual;
      if (residual > 5.0) {
        record(state, "registration", "register", "110", "110",
               "RejectedStepFailure",
               { failed_step: "run_registration",
                 reason: { avg_residual_mm: residual, threshold_mm: 5.0 } });
        return;
      }
      state.registration = "111";
      record(state, "registration", "register", "110", "111", "Accepted");
      return;
    }
    case "PLAN_POSES":
      if (state.pose_plan !== "0") {
        record(state, "pose_plan", "plan_poses", "1", "1", "RejectedInvalid");
        return;
      }
      state.pose_plan = "1";
      state.posesPlanned = true;
      record(state, "pose_plan", "plan_poses", "0", "1", "Accepted");
      return;
    case "PLACE_TOOL":
      if (reg !== "111") {
        record(state, "registration", "place", reg, reg, "RejectedInvalid");
        return;
      }
      if (!state.posesPlanned) {
        record(state, "registration", "place", "111", "111", "RejectedStepFailure",
               { failed_step: "place_tool", reason: "no planned poses" });
        return;
      }
      state.placements.push([0.51, 0.17]);
      record(state, "registration", "place", "111", "111", "Accepted");
      return;
    case "ARM_FAULT": {
      const kinds: Record<number, string> = {
        1: "MissingLandmarkPlan", 2: "MissingLandmark", 3: "LargeDigitizationError",
      };
      state.armedFault = values.length
        ? { kind: kinds[values[0]] ?? "unknown", landmark: values[1] }
        : null;
      state.faultSpent = false;
      return; // data command: no transition record
    }
    default:
      record(state, "?", name, "?", "?", "RejectedInvalid", "unknown command");
  }
}

function operationsView(state: MockState) {
  const reg = state.registration;
  const digitizationLive = reg === "100" || reg === "110";
  return {
    registration: {
      digits: reg,
      operations: {
        plan: reg === "000",
        replan: reg !== "000",
        register: reg === "110",
        place: reg === "111",
      },
    },
    digitization: {
      digits: state.digitization,
      operations: {
        digitize: digitizationLive && state.digitization === "0",
        all_digitized: digitizationLive && state.digitization === "0",
        reinit: digitizationLive,
      },
    },
    pose_plan: {
      digits: state.pose_plan,
      operations: {
        plan_poses: state.pose_plan === "0",
        replan_poses: state.pose_plan === "1",
      },
    },
  };
}

function snapshotOf(state: MockState) {
  state.snapshotSeq += 1;
  return {
    seq: state.snapshotSeq,
    time: Date.now() / 1000,
    branches: operationsView(state),
    flags: {
      planned: state.registration[0] === "1",
      digitized: state.registration[1] === "1",
      registered: state.registration[2] === "1",
      poses_planned: state.pose_plan === "1",
    },
    transitions: state.transitions.slice(),
    avg_residual: state.residual,
    pose_errors: state.placements.slice(),
    armed_fault: state.armedFault,
  };
}

export interface MockEngine {
  port: number;
  close(): Promise<void>;
  state: MockState;
}

export function startMockEngine(snapshotPeriodMs = 10): Promise<MockEngine> {
  const state = fresh();
  const sockets = new Set<net.Socket>();
  const server = net.createServer((socket) => {
    sockets.add(socket);
    let buffer = Buffer.alloc(0);
    socket.on("data", (chunk) => {
      buffer = Buffer.concat([buffer, chunk]);
      while (buffer.length >= LENGTH_PREFIX) {
        const frameLen = parseInt(buffer.subarray(0, LENGTH_PREFIX).toString("ascii"), 10);
        if (Number.isNaN(frameLen)) { socket.destroy(); return; }
        if (buffer.length < LENGTH_PREFIX + frameLen) break;
        const frame = buffer.subarray(LENGTH_PREFIX, LENGTH_PREFIX + frameLen).toString("ascii");
        buffer = buffer.subarray(LENGTH_PREFIX + frameLen);
        const name = frame.slice(0, HEADER_LENGTH).replace(/_+$/, "");
        const body = frame.slice(HEADER_LENGTH);
        const values = body ? body.split(",").map(Number) : [];
        dispatch(state, name, values);
      }
    });
    socket.on("close", () => sockets.delete(socket));
    socket.on("error", () => sockets.delete(socket));
  });

  const timer = setInterval(() => {
    const line = JSON.stringify(snapshotOf(state)) + "\n";
    for (const socket of sockets) socket.write(line);
  }, snapshotPeriodMs);

  return new Promise((resolve) => {
    server.listen(0, "127.0.0.1", () => {
      const address = server.address() as net.AddressInfo;
      resolve({
        port: address.port,
        state,
        close: () =>
          new Promise<void>((done) => {
            clearInterval(timer);
            for (const socket of sockets) socket.destroy();
            server.close(() => done());
          }),
      });
    });
  });
}
