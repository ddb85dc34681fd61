/** Typed wrappers for the grounding service HTTP API.
 *
 * Every request made through the client is recorded in an audit log so
 * tests (and curious users) can verify the console is a thin client:
 * all displayed numbers must be traceable to one of these responses.
 */

export interface MapArea {
  id: string;
  category: string;
  subcategory?: string;
  name?: string;
  polygon: number[][];
}

export interface MapDocument {
  map: { boundary: number[][]; resolution: number; areas: MapArea[] };
  layout: {
    width: number;
    height: number;
    x_min: number;
    y_min: number;
    x_max: number;
    y_max: number;
  };
  adjacency: string[][];
}

export interface GroundStep {
  modifier: string;
  type: string;
  belief: string;
  argmax_cell: number;
}

export interface GroundResponse {
  trace_id: number;
  steps: GroundStep[];
  ranked_areas: { id: string; weight: number }[];
}

export interface BeliefGrid {
  width: number;
  height: number;
  cells: number[];
}

export interface AuditEntry {
  method: string;
  path: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service error ${status}`);
  }
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private log: AuditEntry[] = [];

  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  audit(): readonly AuditEntry[] {
    return this.log;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.log.push({ method, path });
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, (payload as { detail?: unknown }).detail);
    }
    return payload as T;
  }

  getMap(): Promise<MapDocument> {
    return this.request("GET", "/map");
  }

  ground(instruction: string): Promise<GroundResponse> {
    return this.request("POST", "/ground", { instruction });
  }

  getBelief(traceId: number, step: number): Promise<BeliefGrid> {
    return this.request("GET", `/belief/${traceId}/${step}`);
  }

  plan(goal: string, start?: string): Promise<{ plan: string[] }> {
    return this.request("POST", "/plan", start ? { start, goal } : { goal });
  }

  robotMove(plan: string[]): Promise<{ robot: string; arrived: boolean }> {
    return this.request("POST", "/robot/move", { plan });
  }

  robot(): Promise<{ robot: string }> {
    return this.request("GET", "/robot");
  }
}
