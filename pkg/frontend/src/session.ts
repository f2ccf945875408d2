/**
 * Headless scripted operator session against a live engine bridge.
 *
 * Performs the nominal workflow (plan, digitize each landmark,
 * all-digitized, register, plan poses, place), requiring each verdict
 * to become visible in a snapshot within the latency budget. Also
 * force-sends a raw REGISTRATION_REG frame at the initial state (the
 * UI would never enable that button) and requires exactly one
 * server-side rejection in the log.
 *
 * Usage: node dist/session.js --port <bridge-port> [--host H]
 *        [--landmarks 6] [--places 3] [--budget-ms 200]
 * Prints a JSON result line; exit 0 on success.
 */

import { BridgeClient } from "./client.js";
import { VerdictLog } from "./log.js";
import { operationEnabled } from "./enablement.js";
import type { Snapshot } from "./protocol.js";

interface Args {
  host: string;
  port: number;
  landmarks: number;
  places: number;
  budgetMs: number;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { host: "127.0.0.1", port: 0, landmarks: 6, places: 3, budgetMs: 200 };
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (key === "--host") args.host = value;
    else if (key === "--port") args.port = parseInt(value, 10);
    else if (key === "--landmarks") args.landmarks = parseInt(value, 10);
    else if (key === "--places") args.places = parseInt(value, 10);
    else if (key === "--budget-ms") args.budgetMs = parseInt(value, 10);
    else throw new Error(`unknown argument ${key}`);
  }
  if (!args.port) throw new Error("--port is required");
  return args;
}

async function main(): Promise<number> {
  const args = parseArgs(process.argv.slice(2));
  const client = new BridgeClient();
  const log = new VerdictLog();
  client.on("snapshot", (s) => log.absorb(s));
  await client.connect(args.host, args.port);

  const first = await client.waitFor(() => true);
  if (first.branches.registration.digits !== "000") {
    throw new Error(`expected a fresh engine at 000, got ${first.branches.registration.digits}`);
  }
  if (operationEnabled(first, "registration", "register")) {
    throw new Error("register must be disabled at state 000");
  }

  // Forced raw frame the UI would never send: must be rejected, once.
  client.send("REGISTRATION_REG");
  await client.waitFor((s: Snapshot) =>
    log.entries.some(
      (e) => e.operation === "register" && e.outcome === "RejectedInvalid",
    ),
  );

  const script: string[] = [
    "PLAN_LANDMARKS",
    ...Array(args.landmarks).fill("DIGITIZE_POINT"),
    "ALL_DIGITIZED",
    "REGISTRATION_REG",
    "PLAN_POSES",
    ...Array(args.places).fill("PLACE_TOOL"),
  ];

  const latencies: number[] = [];
  let accepted = 0;
  for (const name of script) {
    client.send(name);
    accepted += 1;
    const want = accepted;
    const sent = Date.now();
    await client.waitFor(
      () => log.entries.filter((e) => e.outcome === "Accepted").length >= want,
      5000,
    );
    const latency = Date.now() - sent;
    latencies.push(latency);
    if (latency > args.budgetMs) {
      throw new Error(`verdict for ${name} took ${latency} ms (budget ${args.budgetMs} ms)`);
    }
  }

  const final = await client.waitFor(
    (s) => s.branches.registration.digits === "111" && s.pose_errors.length >= args.places,
  );
  const rejections = log.entries.filter(
    (e) => e.operation === "register" && e.outcome === "RejectedInvalid",
  );
  if (rejections.length !== 1) {
    throw new Error(`expected exactly one forced rejection, saw ${rejections.length}`);
  }
  const seqs = log.entries.map((e) => e.seq);
  for (let i = 1; i < seqs.length; i++) {
    if (seqs[i] <= seqs[i - 1]) throw new Error("verdict log out of order");
  }

  client.close();
  console.log(
    JSON.stringify({
      ok: true,
      verdicts: log.entries.length,
      accepted,
      forced_rejections: rejections.length,
      max_latency_ms: Math.max(...latencies),
      avg_residual: final.avg_residual,
      placements: final.pose_errors.length,
      registration: final.branches.registration.digits,
    }),
  );
  return 0;
}

main()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(JSON.stringify({ ok: false, error: String(err?.message ?? err) }));
    process.exit(1);
  });
