import { execFile } from "node:child_process";
import { promisify } from "node:util";

import { describe, expect, it } from "vitest";

import { makeEnv, type Observation } from "../src/index.js";

const execFileAsync = promisify(execFile);

const EPISODES = 100;
const BASE_SEED = 1000;
const MAX_ROUNDS = 30;
const MAX_STEPS = 400;

/** Same 31-bit LCG as scripts/native_trace.py; BigInt keeps it exact. */
class Lcg {
  private x: bigint;
  constructor(seed: number) {
    this.x = BigInt(seed) % 2147483648n;
  }
  pick(n: number): number {
    this.x = (1103515245n * this.x + 12345n) % 2147483648n;
    return Number(this.x % BigInt(n));
  }
}

interface TraceStep {
  index: number;
  reward: number;
  done: boolean;
  outcome: string;
  round: number;
  events: number;
  observation: Observation;
}

describe("cross-boundary fidelity", () => {
  it(
    `${EPISODES} seeded episodes via the bindings equal native traces field-for-field`,
    async () => {
      const python = process.env.SRDARENA_PYTHON ?? "python3";
      const nativePromise = execFileAsync(
        python,
        [
          "scripts/native_trace.py",
          "--episodes", String(EPISODES),
          "--base-seed", String(BASE_SEED),
          "--max-rounds", String(MAX_ROUNDS),
          "--max-steps", String(MAX_STEPS),
        ],
        { maxBuffer: 512 * 1024 * 1024 },
      );

      const env = await makeEnv({
        class_mode: "fighter_only",
        seed: 0,
        adversary: "rules",
        max_rounds: MAX_ROUNDS,
      });
      const boundTraces: { seed: number; steps: TraceStep[] }[] = [];
      try {
        for (let i = 0; i < EPISODES; i++) {
          const seed = BASE_SEED + i;
          const lcg = new Lcg(seed);
          let obs = await env.reset(seed);
          const steps: TraceStep[] = [];
          for (let step = 0; step < MAX_STEPS; step++) {
            const index = lcg.pick(obs.legal.length);
            const result = await env.step(index);
            obs = result.observation;
            steps.push({
              index,
              reward: result.reward,
              done: result.done,
              outcome: result.info.outcome,
              round: result.info.round,
              events: result.info.events,
              observation: result.observation,
            });
            if (result.done) break;
          }
          boundTraces.push({ seed, steps });
        }
      } finally {
        await env.close();
      }

      const { stdout } = await nativePromise;
      const nativeTraces = JSON.parse(stdout);
      expect(boundTraces.length).toBe(nativeTraces.length);
      for (let i = 0; i < boundTraces.length; i++) {
        expect(boundTraces[i]).toEqual(nativeTraces[i]);
      }
    },
    300_000,
  );
});
