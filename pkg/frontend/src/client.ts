/**
 * Client for the voxbatch simulator service: make / step / close with flat
 * numeric buffers. Observations arrive as one contiguous RGB8 buffer per
 * step (env-major, agent-minor), copied exactly once out of the transport
 * encoding. All shape and range validation happens here, before any HTTP
 * call, so an invalid batch can never produce a partial step server-side.
 */

export const ACTION_HEADS = [3, 3, 3, 3, 2, 2] as const;
export const NUM_ACTIONS = 324;
export const OBS_HEIGHT = 72;
export const OBS_WIDTH = 128;
export const OBS_CHANNELS = 3;
export const FRAME_BYTES = OBS_HEIGHT * OBS_WIDTH * OBS_CHANNELS;

export interface MakeOptions {
  kind: string;
  numEnvs?: number;
  agentsPerEnv?: number;
  seed?: number;
  numWorkers?: number;
  overrides?: Record<string, number>;
}

export interface ObservationBatch {
  /** Raw RGB8 pixels, shape (batch, 72, 128, 3) flattened. */
  data: Uint8Array;
  shape: [number, number, number, number];
}

export interface StepResult {
  observations: ObservationBatch;
  rewards: Float32Array;
  dones: boolean[];
  trueObjectives: Float32Array;
}

export interface SessionInfo {
  session_id: string;
  kind: string;
  num_envs: number;
  agents_per_env: number;
  batch_size: number;
  obs_shape: [number, number, number];
  action_heads: number[];
  num_actions: number;
}

export class VoxbatchError extends Error {}

export class ValidationError extends VoxbatchError {
  constructor(public readonly key: string, message: string) {
    super(message);
  }
}

/** Actions: flat codes (length N*M) or per-head rows (N*M x 6). */
export type ActionBatch =
  | ArrayLike<number>
  | number[][];

function decodeBase64(b64: string): Uint8Array {
  return new Uint8Array(Buffer.from(b64, "base64"));
}

export function validateActions(actions: ActionBatch, batchSize: number): number[] | number[][] {
  if (Array.isArray(actions) && actions.length > 0 && Array.isArray(actions[0])) {
    const rows = actions as number[][];
    if (rows.length !== batchSize) {
      throw new ValidationError(
        "actions", `expected ${batchSize} action rows, got ${rows.length}`);
    }
    for (const row of rows) {
      if (row.length !== ACTION_HEADS.length) {
        throw new ValidationError(
          "actions", `each action row needs ${ACTION_HEADS.length} heads, got ${row.length}`);
      }
      for (let h = 0; h < row.length; h++) {
        const v = row[h];
        if (!Number.isInteger(v) || v < 0 || v >= ACTION_HEADS[h]) {
          throw new ValidationError(
            "actions", `head ${h} value ${v} outside [0, ${ACTION_HEADS[h]})`);
        }
      }
    }
    return rows;
  }
  const flat = Array.from(actions as ArrayLike<number>);
  if (flat.length !== batchSize) {
    throw new ValidationError(
      "actions", `expected ${batchSize} flat action codes, got ${flat.length}`);
  }
  for (const v of flat) {
    if (!Number.isInteger(v) || v < 0 || v >= NUM_ACTIONS) {
      throw new ValidationError(
        "actions", `flat action code ${v} outside [0, ${NUM_ACTIONS})`);
    }
  }
  return flat;
}

async function expectOk(resp: Response): Promise<any> {
  if (!resp.ok) {
    let detail = `${resp.status}`;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body);
    } catch {
      /* non-JSON error body */
    }
    throw new VoxbatchError(`server rejected request: ${detail}`);
  }
  return resp.json();
}

export class RemoteVecEnv {
  private closed = false;
  private stepInFlight = false;

  private constructor(
    private readonly baseUrl: string,
    public readonly info: SessionInfo,
    public readonly initialObservations: ObservationBatch,
  ) {}

  /** Build a pool on the server and fetch the first observations. */
  static async make(baseUrl: string, options: MakeOptions): Promise<RemoteVecEnv> {
    const numEnvs = options.numEnvs ?? 1;
    const agents = options.agentsPerEnv ?? 1;
    if (!Number.isInteger(numEnvs) || numEnvs < 1) {
      throw new ValidationError("numEnvs", `numEnvs must be >= 1, got ${numEnvs}`);
    }
    if (!Number.isInteger(agents) || agents < 1) {
      throw new ValidationError("agentsPerEnv", `agentsPerEnv must be >= 1, got ${agents}`);
    }
    const body = {
      kind: options.kind,
      num_envs: numEnvs,
      agents_per_env: agents,
      seed: options.seed ?? 0,
      num_workers: options.numWorkers ?? 1,
      overrides: options.overrides ?? null,
    };
    const resp = await fetch(`${baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const made = await expectOk(resp);
    const info: SessionInfo = made.session;
    return new RemoteVecEnv(baseUrl, info,
      unpackObservations(made.observations_b64, info.batch_size));
  }

  get batchSize(): number {
    return this.info.batch_size;
  }

  async step(actions: ActionBatch): Promise<StepResult> {
    if (this.closed) {
      throw new VoxbatchError("step() after close()");
    }
    const payload = validateActions(actions, this.info.batch_size);
    if (this.stepInFlight) {
      throw new VoxbatchError(
        "concurrent step() on one session handle is a contract violation");
    }
    this.stepInFlight = true;
    try {
      const resp = await fetch(
        `${this.baseUrl}/sessions/${this.info.session_id}/step`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify({ actions: payload }),
        });
      const body = await expectOk(resp);
      return {
        observations: unpackObservations(body.observations_b64,
          this.info.batch_size),
        rewards: Float32Array.from(body.rewards as number[]),
        dones: body.dones as boolean[],
        trueObjectives: Float32Array.from(body.true_objectives as number[]),
      };
    } finally {
      this.stepInFlight = false;
    }
  }

  async close(): Promise<void> {
    if (this.closed) {
      return;
    }
    this.closed = true;
    await fetch(`${this.baseUrl}/sessions/${this.info.session_id}`, {
      method: "DELETE",
    });
  }
}

export function unpackObservations(b64: string, batch: number): ObservationBatch {
  const data = decodeBase64(b64);
  if (data.length !== batch * FRAME_BYTES) {
    throw new VoxbatchError(
      `observation payload is ${data.length} bytes, expected ${batch * FRAME_BYTES}`);
  }
  return { data, shape: [batch, OBS_HEIGHT, OBS_WIDTH, OBS_CHANNELS] };
}

/** One frame of a batch as a zero-copy subarray view. */
export function frame(obs: ObservationBatch, index: number): Uint8Array {
  if (index < 0 || index >= obs.shape[0]) {
    throw new VoxbatchError(`frame index ${index} outside batch of ${obs.shape[0]}`);
  }
  return obs.data.subarray(index * FRAME_BYTES, (index + 1) * FRAME_BYTES);
}

export interface ReplayTrace {
  action_codes: number[][];
  rewards: number[][];
  dones: boolean[][];
  true_objectives: number[][];
  frame_sha256: string[][];
  initial_frame_sha256: string[];
}

/** Run an episode natively on the server and return its full trace; the
 * reference side for cross-boundary equivalence checks. */
export async function nativeReplay(baseUrl: string, req: {
  kind: string;
  seed?: number;
  steps?: number;
  numEnvs?: number;
  agentsPerEnv?: number;
  overrides?: Record<string, number>;
  actions?: number[][];
}): Promise<ReplayTrace> {
  const resp = await fetch(`${baseUrl}/replays`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({
      kind: req.kind,
      seed: req.seed ?? 0,
      steps: req.steps ?? 512,
      num_envs: req.numEnvs ?? 1,
      agents_per_env: req.agentsPerEnv ?? 1,
      overrides: req.overrides ?? null,
      actions: req.actions ?? null,
    }),
  });
  return expectOk(resp);
}

export async function serverMeta(baseUrl: string): Promise<{
  version: string;
  scenarios: string[];
  action_heads: number[];
  num_actions: number;
  observation: Record<string, number>;
}> {
  return expectOk(await fetch(`${baseUrl}/meta`));
}
