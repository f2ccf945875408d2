/**
 * Branch operation -> engine command name mapping, mirroring the
 * engine's dispatch table. Payloads are empty: the engine simulates
 * measurements server-side for console-driven runs.
 */

export const COMMANDS: Record<string, Record<string, string>> = {
  registration: {
    plan: "PLAN_LANDMARKS",
    replan: "REPLAN_LANDMARKS",
    register: "REGISTRATION_REG",
    place: "PLACE_TOOL",
  },
  digitization: {
    digitize: "DIGITIZE_POINT",
    all_digitized: "ALL_DIGITIZED",
    reinit: "REINIT_DIGITIZE",
  },
  pose_plan: {
    plan_poses: "PLAN_POSES",
    replan_poses: "REPLAN_POSES",
  },
  robot_link: {
    connect: "ROBOT_CONNECT",
    disconnect: "ROBOT_DISCONN",
  },
};

export function commandFor(branch: string, operation: string): string | undefined {
  return COMMANDS[branch]?.[operation];
}
