/**
 * Bindings for the srdarena combat environment.
 *
 * Each environment owns a `srdarena env-server` child process and talks
 * line-delimited JSON over stdio (see docs/env-server-protocol.md in the
 * parent package). Engine failures come back as EnvError exceptions;
 * the child crashing rejects all pending calls instead of taking the
 * host process down.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

export interface ActionEncoding {
  action_type: number;
  binary_action: number;
  binary_subtype: number;
  weapon_type: number;
  entity_type: number;
  terrain_type: number;
  direction: number;
}

export interface Observation {
  /** 16 x 7 x 7 viewport, values in [0, 1]. */
  tiles: number[][][];
  /** 13 scalar self features. */
  features: number[];
  /** [own class id, enemy class id]. */
  class_ids: number[];
  /** Encoded legal actions; index into this list is the step argument. */
  legal: ActionEncoding[];
  /** One menu line per legal action. */
  menu: string[];
}

export interface StepInfo {
  outcome: string;
  round: number;
  events: number;
}

export interface StepTuple {
  observation: Observation;
  reward: number;
  done: boolean;
  info: StepInfo;
}

export interface ActionMask {
  /** One flag per global action id. */
  mask: boolean[];
  /** Menu index -> global action id for the current state. */
  menuToGlobal: number[];
  /** Size of the fixed global vocabulary. */
  globalActions: number;
}

export interface EnvConfig {
  class_mode?: "fighter_only" | "four_classes";
  map_pool?: string[];
  seed?: number;
  max_rounds?: number;
  adversary?: "rules" | "random" | "inert";
}

export interface MakeEnvOptions {
  /** Command used to start the server; defaults to
   *  SRDARENA_PYTHON (or python3) -m srdarena.cli env-server. */
  command?: string[];
  cwd?: string;
}

/** Raised for protocol-level failures reported by the engine. */
export class EnvError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EnvError";
  }
}

interface Pending {
  resolve: (value: Record<string, unknown>) => void;
  reject: (error: Error) => void;
}

class ServerProcess {
  private child: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private pending: Pending[] = [];
  private stderrTail = "";
  private exited = false;

  constructor(options?: MakeEnvOptions) {
    const command = options?.command ?? [
      process.env.SRDARENA_PYTHON ?? "python3",
      "-m",
      "srdarena.cli",
      "env-server",
    ];
    this.child = spawn(command[0], command.slice(1), {
      cwd: options?.cwd,
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.child.stderr.on("data", (chunk: Buffer) => {
      this.stderrTail = (this.stderrTail + chunk.toString()).slice(-2000);
    });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    const fail = (reason: string) => () => this.failAll(reason);
    this.child.on("error", (err) => this.failAll(`spawn failed: ${err.message}`));
    this.child.on("exit", fail("server exited"));
  }

  private onLine(line: string): void {
    const waiter = this.pending.shift();
    if (!waiter) return;
    let parsed: Record<string, unknown>;
    try {
      parsed = JSON.parse(line);
    } catch (err) {
      waiter.reject(new EnvError(`unparseable server response: ${line}`));
      return;
    }
    waiter.resolve(parsed);
  }

  private failAll(reason: string): void {
    this.exited = true;
    const waiting = this.pending;
    this.pending = [];
    const detail = this.stderrTail ? `; stderr: ${this.stderrTail.trim()}` : "";
    for (const waiter of waiting) {
      waiter.reject(new EnvError(`${reason}${detail}`));
    }
  }

  request(body: Record<string, unknown>): Promise<Record<string, unknown>> {
    if (this.exited) {
      return Promise.reject(new EnvError("server process is gone"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.child.stdin.write(JSON.stringify(body) + "\n");
    });
  }

  async call(body: Record<string, unknown>): Promise<Record<string, unknown>> {
    const response = await this.request(body);
    if (!response.ok) {
      throw new EnvError(String(response.error ?? "unknown engine error"));
    }
    return response;
  }

  stop(): void {
    this.exited = true;
    this.lines.close();
    this.child.stdin.end();
    this.child.kill();
  }
}

export class EnvHandle {
  private closed = false;

  constructor(
    private readonly server: ServerProcess,
    private readonly handle: number,
    /** Echo of the configuration the environment was built with. */
    public readonly config: EnvConfig,
  ) {}

  private guard(): void {
    if (this.closed) {
      throw new EnvError("environment handle is closed");
    }
  }

  async reset(seed?: number): Promise<Observation> {
    this.guard();
    const response = await this.server.call({
      op: "reset",
      handle: this.handle,
      ...(seed === undefined ? {} : { seed }),
    });
    return response.observation as unknown as Observation;
  }

  async step(actionIndex: number): Promise<StepTuple> {
    this.guard();
    const response = await this.server.call({
      op: "step",
      handle: this.handle,
      action: actionIndex,
    });
    return {
      observation: response.observation as unknown as Observation,
      reward: response.reward as number,
      done: response.done as boolean,
      info: response.info as unknown as StepInfo,
    };
  }

  async actionMask(): Promise<ActionMask> {
    this.guard();
    const response = await this.server.call({ op: "mask", handle: this.handle });
    return {
      mask: response.mask as boolean[],
      menuToGlobal: response.menu_to_global as number[],
      globalActions: response.global_actions as number,
    };
  }

  async close(): Promise<void> {
    if (this.closed) return;
    this.closed = true;
    try {
      await this.server.call({ op: "close", handle: this.handle });
    } finally {
      this.server.stop();
    }
  }
}

/** Start a server process and build one environment on it. */
export async function makeEnv(
  config: EnvConfig = {},
  options?: MakeEnvOptions,
): Promise<EnvHandle> {
  const server = new ServerProcess(options);
  try {
    const response = await server.call({ op: "make", config });
    return new EnvHandle(server, response.handle as number, config);
  } catch (err) {
    server.stop();
    throw err;
  }
}
