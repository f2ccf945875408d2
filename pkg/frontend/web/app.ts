/**
 * Operator console page. All workflow validity comes from snapshots;
 * the page renders, never decides. Engine host/port can be overridden
 * with URL query parameters (?host=...&port=...), which the relay
 * forwards to its own engine connection.
 */

import { parseSnapshot, type Snapshot } from "../src/protocol.js";
import { branchOperations, isStale } from "../src/enablement.js";
import { commandFor } from "../src/commands.js";
import { VerdictLog } from "../src/log.js";

const SNAPSHOT_PERIOD_MS = 50;

const query = new URLSearchParams(location.search);
const engineQuery = new URLSearchParams();
if (query.get("host")) engineQuery.set("host", query.get("host")!);
if (query.get("port")) engineQuery.set("port", query.get("port")!);
const suffix = engineQuery.toString() ? `?${engineQuery}` : "";

const log = new VerdictLog();
let latest: Snapshot | null = null;
let lastArrival: number | null = null;

const branchesDiv = document.getElementById("branches")!;
const staleDiv = document.getElementById("stale")!;
const logDiv = document.getElementById("log")!;

async function sendCommand(name: string, values: number[] = []): Promise<void> {
  try {
    const response = await fetch(`/command${suffix}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ name, values }),
    });
    if (!response.ok) appendLine(`transport failure sending ${name}; retry`, "verdict-RejectedInvalid");
  } catch {
    appendLine(`transport failure sending ${name}; retry`, "verdict-RejectedInvalid");
  }
}

function appendLine(text: string, cls = ""): void {
  const div = document.createElement("div");
  div.textContent = text;
  if (cls) div.className = cls;
  logDiv.appendChild(div);
  logDiv.scrollTop = logDiv.scrollHeight;
}

function render(snapshot: Snapshot): void {
  branchesDiv.textContent = "";
  for (const [branch, view] of Object.entries(snapshot.branches)) {
    const panel = document.createElement("div");
    panel.className = "panel";
    const title = document.createElement("h2");
    title.textContent = branch;
    const digits = document.createElement("div");
    digits.className = "digits";
    digits.textContent = view.digits;
    panel.append(title, digits);
    for (const [op, enabled] of branchOperations(snapshot, branch)) {
      const button = document.createElement("button");
      button.textContent = op.replaceAll("_", " ");
      button.disabled = !enabled;
      button.dataset.branch = branch;
      button.dataset.op = op;
      button.onclick = () => {
        const mapped = commandFor(branch, op);
        if (mapped) void sendCommand(mapped);
      };
      panel.appendChild(button);
    }
    branchesDiv.appendChild(panel);
  }
  const residual = snapshot.avg_residual;
  document.getElementById("residual")!.textContent =
    residual == null ? "–" : `${residual.toFixed(4)} mm`;
  document.getElementById("placements")!.textContent = `${snapshot.pose_errors.length}`;
  document.getElementById("flags")!.textContent = Object.entries(snapshot.flags)
    .map(([k, v]) => `${k}=${v ? "1" : "0"}`)
    .join(" ");
  document.getElementById("fault-state")!.textContent = snapshot.armed_fault
    ? `armed: ${JSON.stringify(snapshot.armed_fault)}`
    : "";
}

function onSnapshot(snapshot: Snapshot): void {
  latest = snapshot;
  lastArrival = Date.now();
  for (const entry of log.absorb(snapshot)) {
    const detail = entry.detail ? ` ${JSON.stringify(entry.detail)}` : "";
    appendLine(
      `#${entry.seq} ${entry.branch}.${entry.operation} ` +
        `${entry.from}->${entry.to} ${entry.outcome}${detail}`,
      `verdict-${entry.outcome}`,
    );
  }
  render(snapshot);
}

document.getElementById("fault-arm")!.onclick = () => {
  const kind = (document.getElementById("fault-kind") as HTMLSelectElement).value;
  if (!kind) {
    void sendCommand("ARM_FAULT", []);
    return;
  }
  const landmark = Number((document.getElementById("fault-landmark") as HTMLInputElement).value);
  const max = 6; // client-side bound; the engine re-validates per scenario
  if (!(landmark >= 1 && landmark <= max)) {
    appendLine(`invalid landmark index ${landmark}`, "verdict-RejectedInvalid");
    return;
  }
  const axis = Number((document.getElementById("fault-axis") as HTMLSelectElement).value);
  const offset = Number((document.getElementById("fault-offset") as HTMLInputElement).value);
  void sendCommand("ARM_FAULT", [Number(kind), landmark, axis, offset]);
};

const events = new EventSource(`/events${suffix}`);
events.onmessage = (event) => onSnapshot(parseSnapshot(event.data));
events.onerror = () => staleDiv.classList.add("on");

setInterval(() => {
  staleDiv.classList.toggle("on", isStale(lastArrival, Date.now(), SNAPSHOT_PERIOD_MS));
}, SNAPSHOT_PERIOD_MS);
