// A 20-line learner on the bindings: running mean reward per global
// action id, epsilon-greedy over the current mask.
import { makeEnv } from "../index.js";

const env = await makeEnv({ class_mode: "fighter_only", adversary: "rules", max_rounds: 60 });
const mean = new Array(64).fill(0);
const count = new Array(64).fill(0);
let wins = 0;
for (let episode = 0; episode < 12; episode++) {
  let obs = await env.reset(1000 + episode);
  for (let step = 0; ; step++) {
    const { menuToGlobal } = await env.actionMask();
    const scores = menuToGlobal.map((g) => mean[g] + (Math.random() < 0.2 ? Math.random() : 0));
    const index = scores.indexOf(Math.max(...scores));
    const { reward, done } = await env.step(index);
    const g = menuToGlobal[index];
    count[g] += 1;
    mean[g] += (reward - mean[g]) / count[g];
    if (done) { if (reward > 0) wins += 1; break; }
  }
}
console.log(`bandit learner: ${wins}/12 wins against the rules AI`);
await env.close();
