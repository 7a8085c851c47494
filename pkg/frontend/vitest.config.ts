import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.spec.ts"],
    // the fidelity suite replays 100 episodes through a child process
    testTimeout: 300_000,
    hookTimeout: 60_000,
    pool: "forks",
  },
});
