/** Session state: the current trace, selected step, robot, and history.
 *
 * All mutation goes through SessionStore methods; subscribers re-render
 * from the snapshot. Belief grids are fetched lazily per step and kept
 * verbatim — the store never computes belief values.
 */

import { ApiClient, ApiError, BeliefGrid, GroundResponse, MapDocument } from "./api";

export interface StepLayer {
  index: number;
  modifier: string;
  type: string;
  grid: BeliefGrid | null; // null until fetched
}

export interface Snapshot {
  map: MapDocument | null;
  layers: StepLayer[];
  selectedStep: number;
  rankedAreas: { id: string; weight: number }[];
  topFive: string[];
  robot: string | null;
  planPath: string[];
  error: string | null;
  history: string[];
  busy: boolean;
}

export type Sleep = (ms: number) => Promise<void>;

const realSleep: Sleep = (ms) => new Promise((r) => setTimeout(r, ms));

export class SessionStore {
  private snap: Snapshot = {
    map: null,
    layers: [],
    selectedStep: -1,
    rankedAreas: [],
    topFive: [],
    robot: null,
    planPath: [],
    error: null,
    history: [],
    busy: false,
  };
  private listeners: Array<(s: Snapshot) => void> = [];
  private traceId: number | null = null;

  constructor(
    private api: ApiClient,
    private sleep: Sleep = realSleep,
  ) {}

  state(): Snapshot {
    return this.snap;
  }

  subscribe(fn: (s: Snapshot) => void): void {
    this.listeners.push(fn);
  }

  private emit(patch: Partial<Snapshot>): void {
    this.snap = { ...this.snap, ...patch };
    for (const fn of this.listeners) fn(this.snap);
  }

  async init(): Promise<void> {
    const map = await this.api.getMap();
    const robot = await this.api.robot();
    this.emit({ map, robot: robot.robot });
  }

  /** Ground a command and load every step's belief layer. */
  async submitCommand(text: string): Promise<void> {
    if (!text.trim()) return;
    this.emit({ busy: true, error: null });
    let resp: GroundResponse;
    try {
      resp = await this.api.ground(text);
    } catch (e) {
      this.emit({
        busy: false,
        layers: [],
        rankedAreas: [],
        topFive: [],
        error: describeError(e),
      });
      return;
    }
    this.traceId = resp.trace_id;
    const layers: StepLayer[] = resp.steps.map((s, i) => ({
      index: i,
      modifier: s.modifier,
      type: s.type,
      grid: null,
    }));
    for (const layer of layers) {
      layer.grid = await this.api.getBelief(resp.trace_id, layer.index);
    }
    this.emit({
      busy: false,
      layers,
      selectedStep: layers.length - 1,
      rankedAreas: resp.ranked_areas,
      topFive: resp.ranked_areas.slice(0, 5).map((a) => a.id),
      history: [...this.snap.history, text],
      planPath: [],
    });
  }

  selectStep(index: number): void {
    if (index >= 0 && index < this.snap.layers.length) {
      this.emit({ selectedStep: index });
    }
  }

  /** Plan to the confirmed area and walk the robot there, one area per
   * poll tick. Resolves when the robot arrives. */
  async confirmAndGo(areaId: string, tickMs = 300): Promise<void> {
    this.emit({ busy: true, error: null });
    let plan: string[];
    try {
      plan = (await this.api.plan(areaId)).plan;
    } catch (e) {
      this.emit({ busy: false, error: describeError(e) });
      return;
    }
    this.emit({ planPath: plan });
    for (let guard = 0; guard < plan.length + 1; guard++) {
      const move = await this.api.robotMove(plan);
      this.emit({ robot: move.robot });
      if (move.arrived) break;
      await this.sleep(tickMs);
    }
    this.emit({ busy: false });
  }
}

function describeError(e: unknown): string {
  if (e instanceof ApiError) {
    const detail =
      typeof e.detail === "string" ? e.detail : JSON.stringify(e.detail);
    if (e.status === 400) return `cannot parse: ${detail}`;
    if (e.status === 409) return `grounding degenerated: ${detail}`;
    return `service error ${e.status}: ${detail}`;
  }
  return String(e);
}
