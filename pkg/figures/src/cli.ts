#!/usr/bin/env node
/**
 * figures render <fig-id> --from <artifact-dir> --out <png>
 * figures list
 */
import { MissingArtifact } from "./artifacts.js";
import { renderToFile } from "./index.js";
import { RECIPES } from "./recipes.js";

function usage(): never {
  console.error(
    "usage: figures render <fig-id> --from <artifact-dir> --out <png> " +
    "[--arrow-stride N]\n       figures list");
  process.exit(2);
}

function main(argv: string[]): number {
  if (argv.length === 0) usage();
  const [command, ...rest] = argv;
  if (command === "list") {
    for (const r of Object.values(RECIPES)) {
      console.log(`${r.id.padEnd(6)} ${r.description}`);
      console.log(`       needs: ${r.required.join(", ")}`);
    }
    return 0;
  }
  if (command !== "render") usage();
  const figId = rest[0];
  let from = "";
  let out = "";
  let arrowStride: number | undefined;
  for (let i = 1; i < rest.length; i++) {
    if (rest[i] === "--from") from = rest[++i];
    else if (rest[i] === "--out") out = rest[++i];
    else if (rest[i] === "--arrow-stride") arrowStride = Number(rest[++i]);
    else usage();
  }
  if (!figId || !from || !out) usage();
  try {
    renderToFile(figId, from, out, { arrowStride });
    console.log(`${figId} -> ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof MissingArtifact) {
      console.error(`error: ${err.message}`);
      return 3;
    }
    throw err;
  }
}

process.exit(main(process.argv.slice(2)));
