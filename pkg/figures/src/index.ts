import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { MissingArtifact } from "./artifacts.js";
import { encodePng } from "./png.js";
import { RECIPES, Recipe, RecipeOptions } from "./recipes.js";
import { Raster } from "./raster.js";

export { MissingArtifact } from "./artifacts.js";
export { encodePng, crc32 } from "./png.js";
export { RECIPES } from "./recipes.js";
export { Raster, heatColor } from "./raster.js";
export type { Recipe, RecipeOptions } from "./recipes.js";

export function renderToBuffer(figId: string, artifactDir: string,
                               options?: RecipeOptions): Buffer {
  const recipe = RECIPES[figId];
  if (!recipe) {
    throw new Error(
      `unknown figure '${figId}' (have: ${Object.keys(RECIPES).join(", ")})`);
  }
  const raster: Raster = recipe.render(artifactDir, options);
  return encodePng(raster.width, raster.height, raster.data);
}

export function renderToFile(figId: string, artifactDir: string,
                             outPath: string,
                             options?: RecipeOptions): string {
  const buf = renderToBuffer(figId, artifactDir, options);
  mkdirSync(dirname(outPath), { recursive: true });
  writeFileSync(outPath, buf);
  return outPath;
}
