/** An in-memory stand-in for the grounding service, for mocked-fetch tests.
 *
 * Serves a 3x2-cell toy floor with two areas plus canned traces; belief
 * values are distinctive constants so tests can prove rendered numbers
 * originate here and nowhere else.
 */

import type { FetchFn } from "../src/api";

export const FIG2_PHRASE = "go to the meeting room near the north exit";
export const GOLD_AREA = "124";

export const FAKE_MAP = {
  map: {
    boundary: [
      [0, 0],
      [3, 0],
      [3, 2],
      [0, 2],
    ],
    resolution: 1.0,
    areas: [
      {
        id: "124",
        category: "room",
        subcategory: "meeting",
        polygon: [
          [0, 0],
          [1, 0],
          [1, 2],
          [0, 2],
        ],
      },
      {
        id: "150",
        category: "room",
        subcategory: "meeting",
        polygon: [
          [2, 0],
          [3, 0],
          [3, 2],
          [2, 2],
        ],
      },
    ],
  },
  layout: { width: 3, height: 2, x_min: 0, y_min: 0, x_max: 3, y_max: 2 },
  adjacency: [["124", "150"]],
};

/** One grid per step; values are unique across the service. */
export const STEP_GRIDS = [
  { width: 3, height: 2, cells: [0.11, 0.02, 0.03, 0.5, 0.04, 0.3] },
  { width: 3, height: 2, cells: [0.21, 0.05, 0.06, 0.4, 0.08, 0.2] },
  { width: 3, height: 2, cells: [0.61, 0.0, 0.0, 0.39, 0.0, 0.0] },
];

export const GROUND_RESPONSE = {
  trace_id: 7,
  steps: [
    { modifier: "the north exit", type: "precise", belief: "/belief/7/0", argmax_cell: 3 },
    { modifier: "near", type: "proximity", belief: "/belief/7/1", argmax_cell: 3 },
    { modifier: "the meeting room", type: "precise", belief: "/belief/7/2", argmax_cell: 0 },
  ],
  ranked_areas: [
    { id: GOLD_AREA, weight: 0.8123 },
    { id: "150", weight: 0.1877 },
  ],
};

export interface FakeService {
  fetchFn: FetchFn;
  requests: { method: string; path: string }[];
  robotAt(): string;
}

export function fakeService(
  overrides: Partial<{ plan: string[]; start: string }> = {},
): FakeService {
  const requests: { method: string; path: string }[] = [];
  const plan = overrides.plan ?? ["100", "110", "124"];
  let robot = overrides.start ?? plan[0];

  const json = (body: unknown, status = 200) =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });

  const fetchFn: FetchFn = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    requests.push({ method, path });

    if (path === "/map") return json(FAKE_MAP);
    if (path === "/robot") return json({ robot });
    if (path === "/ground") {
      const body = JSON.parse(String(init?.body ?? "{}"));
      if (body.instruction === FIG2_PHRASE) return json(GROUND_RESPONSE);
      return json({ detail: `unrecognized verb prefix in '${body.instruction}'` }, 400);
    }
    const belief = path.match(/^\/belief\/7\/(\d+)$/);
    if (belief) {
      const step = Number(belief[1]);
      if (step < STEP_GRIDS.length) return json(STEP_GRIDS[step]);
      return json({ detail: "unknown step" }, 404);
    }
    if (path === "/plan") {
      const body = JSON.parse(String(init?.body ?? "{}"));
      if (body.goal === "offgrid") return json({ detail: "no path" }, 409);
      return json({ plan });
    }
    if (path === "/robot/move") {
      const i = plan.indexOf(robot);
      robot = i >= 0 && i + 1 < plan.length ? plan[i + 1] : plan[0];
      return json({ robot, arrived: robot === plan[plan.length - 1] });
    }
    return json({ detail: "not found" }, 404);
  };

  return { fetchFn, requests, robotAt: () => robot };
}
