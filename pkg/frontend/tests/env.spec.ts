import { describe, expect, it } from "vitest";

import { EnvError, makeEnv } from "../src/index.js";

const OPTIONS = { cwd: process.cwd() };

describe("environment lifecycle", () => {
  it("builds an env and resets to a first observation", async () => {
    const env = await makeEnv({ class_mode: "fighter_only", seed: 7 }, OPTIONS);
    try {
      const obs = await env.reset(11);
      expect(obs.tiles).toHaveLength(16);
      expect(obs.tiles[0]).toHaveLength(7);
      expect(obs.tiles[0][0]).toHaveLength(7);
      expect(obs.features).toHaveLength(13);
      expect(obs.legal.length).toBeGreaterThan(0);
      expect(obs.menu).toHaveLength(obs.legal.length);
      expect(obs.menu[0]).toBe("end my turn");
    } finally {
      await env.close();
    }
  }, 30_000);

  it("rejects unknown config keys with a naming exception", async () => {
    await expect(
      makeEnv({ not_a_key: 1 } as never, OPTIONS),
    ).rejects.toThrow(/not_a_key/);
  }, 30_000);

  it("two envs with the same seed produce identical first observations", async () => {
    const a = await makeEnv({ seed: 7 }, OPTIONS);
    const b = await makeEnv({ seed: 7 }, OPTIONS);
    try {
      const obsA = await a.reset(42);
      const obsB = await b.reset(42);
      expect(obsA).toEqual(obsB);
    } finally {
      await a.close();
      await b.close();
    }
  }, 30_000);
});

describe("stepping", () => {
  it("steps and eventually finishes with a killing-blow reward", async () => {
    const env = await makeEnv(
      { adversary: "inert", seed: 3, max_rounds: 200 },
      OPTIONS,
    );
    try {
      let obs = await env.reset(5);
      let finalReward = 0;
      let done = false;
      for (let i = 0; i < 2000 && !done; i++) {
        const attack = obs.menu.findIndex(
          (line) => line.startsWith("attack") || line.startsWith("cast"),
        );
        const move = obs.menu.findIndex((line) => line.startsWith("move"));
        const pick = attack >= 0 ? attack : move >= 0 ? move : 0;
        const result = await env.step(pick);
        obs = result.observation;
        done = result.done;
        finalReward = result.reward;
      }
      expect(done).toBe(true);
      expect(finalReward).toBe(10.0);
    } finally {
      await env.close();
    }
  }, 60_000);

  it("raises catchable exceptions for bad indexes and stepping after done", async () => {
    const env = await makeEnv(
      { adversary: "inert", seed: 4, max_rounds: 1 },
      OPTIONS,
    );
    try {
      const obs = await env.reset(9);
      await expect(env.step(obs.legal.length)).rejects.toThrow(EnvError);
      // run the episode out to the 1-round tie
      let done = false;
      for (let i = 0; i < 50 && !done; i++) {
        done = (await env.step(0)).done;
      }
      expect(done).toBe(true);
      await expect(env.step(0)).rejects.toThrow(/over|episode/i);
    } finally {
      await env.close();
    }
  }, 60_000);
});

describe("action masks", () => {
  it("mask projects the menu onto the fixed global vocabulary", async () => {
    const env = await makeEnv({ seed: 5 }, OPTIONS);
    try {
      const obs = await env.reset(2);
      const { mask, menuToGlobal, globalActions } = await env.actionMask();
      expect(mask).toHaveLength(globalActions);
      expect(menuToGlobal).toHaveLength(obs.legal.length);
      for (const gid of menuToGlobal) {
        expect(mask[gid]).toBe(true);
      }
      expect(mask.filter(Boolean).length).toBeLessThanOrEqual(obs.legal.length);
    } finally {
      await env.close();
    }
  }, 30_000);

  it("a finished episode yields an all-false mask", async () => {
    const env = await makeEnv(
      { adversary: "inert", seed: 6, max_rounds: 1 },
      OPTIONS,
    );
    try {
      await env.reset(3);
      let done = false;
      for (let i = 0; i < 50 && !done; i++) {
        done = (await env.step(0)).done;
      }
      const { mask } = await env.actionMask();
      expect(mask.every((flag) => !flag)).toBe(true);
    } finally {
      await env.close();
    }
  }, 60_000);
});

describe("handle hygiene", () => {
  it("operations on a closed handle throw synchronously", async () => {
    const env = await makeEnv({ seed: 8 }, OPTIONS);
    await env.reset(1);
    await env.close();
    await expect(async () => env.reset(2)).rejects.toThrow(/closed/);
  }, 30_000);
});
