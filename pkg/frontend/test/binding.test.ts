import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import {
  BoundImage,
  GirBenchError,
  GirSession,
  applyRecipe,
  degradeBatch,
  encodePpm,
  sampleRecipe,
} from "../src/index.js";

/** Deterministic test image with already-quantized (n/255) samples. */
function makeImage(height: number, width: number, seed: number): BoundImage {
  const data = new Float32Array(height * width * 3);
  let state = seed >>> 0;
  for (let i = 0; i < data.length; i++) {
    state = (state * 1664525 + 1013904223) >>> 0;
    data[i] = (state >>> 24) / 255;
  }
  return { height, width, data };
}

const NOISE_SIGMA0 = JSON.stringify({
  master_seed: 0,
  schema_version: 1,
  steps: [{ kind: "noise", params: { sigma255: 0.0 } }],
});

const tempDirs: string[] = [];
function tempDir(): string {
  const dir = mkdtempSync(join(tmpdir(), "girbench-test-"));
  tempDirs.push(dir);
  return dir;
}
afterAll(() => {
  for (const dir of tempDirs) rmSync(dir, { recursive: true, force: true });
});

describe("applyRecipe", () => {
  it("zero-sigma noise recipe returns the input unchanged", () => {
    const img = makeImage(24, 32, 7);
    const out = applyRecipe(img, NOISE_SIGMA0);
    expect(out.height).toBe(24);
    expect(out.width).toBe(32);
    expect(Array.from(out.data)).toEqual(Array.from(img.data));
  });

  it("malformed recipe text raises an error naming the missing field", () => {
    const bad = JSON.stringify({ schema_version: 1, steps: [] });
    expect(() => applyRecipe(makeImage(16, 16, 1), bad)).toThrowError(
      /master_seed/,
    );
    try {
      applyRecipe(makeImage(16, 16, 1), bad);
    } catch (err) {
      expect(err).toBeInstanceOf(GirBenchError);
      expect((err as GirBenchError).exitCode).toBe(1);
    }
  });
});

describe("sampleRecipe", () => {
  it("round trip sample -> apply yields a valid image", () => {
    const recipe = sampleRecipe(2, 11n);
    const parsed = JSON.parse(recipe);
    expect(parsed.schema_version).toBe(1);
    expect(parsed.steps).toHaveLength(2);
    const out = applyRecipe(makeImage(32, 32, 3), recipe);
    expect(out.data.every((v) => v >= 0 && v <= 1)).toBe(true);
  });

  it("rejects out-of-range order", () => {
    expect(() => sampleRecipe(0, 1)).toThrow(RangeError);
    expect(() => sampleRecipe(6, 1)).toThrow(RangeError);
  });
});

describe("degradeBatch", () => {
  it("identical (seed, epoch, index) triples give identical bytes", () => {
    const imgs = [makeImage(32, 32, 5), makeImage(32, 32, 6)];
    const a = degradeBatch(imgs, [1, 3], 99n, 4, [0, 1]);
    const b = degradeBatch(imgs, [1, 3], 99n, 4, [0, 1]);
    for (let i = 0; i < imgs.length; i++) {
      expect(Buffer.compare(encodePpm(a.images[i]), encodePpm(b.images[i]))).toBe(0);
      expect(a.recipes[i]).toBe(b.recipes[i]);
    }
  });

  it("different sample indices give different recipes", () => {
    const imgs = [makeImage(32, 32, 5), makeImage(32, 32, 5)];
    const out = degradeBatch(imgs, [2, 5], 99n, 0, [0, 1]);
    expect(out.recipes[0]).not.toBe(out.recipes[1]);
  });

  it("validates argument shapes", () => {
    const img = makeImage(16, 16, 1);
    expect(() => degradeBatch([img], [3, 2], 0, 0, [0])).toThrow(RangeError);
    expect(() => degradeBatch([img], [1, 2], 0, 0, [0, 1])).toThrow(RangeError);
  });
});

describe("cross-boundary equivalence", () => {
  it("binding output is byte-identical to the CLI on 20 random pairs", () => {
    for (let pair = 0; pair < 20; pair++) {
      const img = makeImage(32, 48, 1000 + pair);
      const order = 1 + (pair % 5);
      const recipe = sampleRecipe(order, BigInt(500 + pair));

      const viaBinding = encodePpm(applyRecipe(img, recipe));

      const dir = tempDir();
      const inPath = join(dir, "in.ppm");
      const outPath = join(dir, "out.ppm");
      const recipePath = join(dir, "recipe.json");
      writeFileSync(inPath, encodePpm(img));
      writeFileSync(recipePath, recipe);
      execFileSync("girbench", [
        "pipeline", "--in", inPath, "--out", outPath, "--recipe", recipePath,
      ]);
      const viaCli = readFileSync(outPath);

      expect(Buffer.compare(viaBinding, viaCli), `pair ${pair}`).toBe(0);
    }
  }, 120_000);
});

describe("session independence", () => {
  it("interleaved sessions with different seeds do not contaminate each other", () => {
    const imgs = [makeImage(32, 32, 40), makeImage(32, 32, 41)];
    const sessionA = new GirSession();
    const sessionB = new GirSession();

    // reference runs, one session at a time
    const refA = imgs.map((im, i) => sessionA.degradeBatch([im], [1, 4], 1n, 0, [i]));
    const refB = imgs.map((im, i) => sessionB.degradeBatch([im], [1, 4], 2n, 0, [i]));

    // interleaved runs: A0, B0, A1, B1
    const mixed: { recipes: string[]; images: BoundImage[] }[] = [];
    for (let i = 0; i < imgs.length; i++) {
      mixed.push(sessionA.degradeBatch([imgs[i]], [1, 4], 1n, 0, [i]));
      mixed.push(sessionB.degradeBatch([imgs[i]], [1, 4], 2n, 0, [i]));
    }

    for (let i = 0; i < imgs.length; i++) {
      expect(mixed[2 * i].recipes[0]).toBe(refA[i].recipes[0]);
      expect(mixed[2 * i + 1].recipes[0]).toBe(refB[i].recipes[0]);
      expect(
        Buffer.compare(encodePpm(mixed[2 * i].images[0]), encodePpm(refA[i].images[0])),
      ).toBe(0);
      expect(
        Buffer.compare(
          encodePpm(mixed[2 * i + 1].images[0]),
          encodePpm(refB[i].images[0]),
        ),
      ).toBe(0);
    }
  }, 60_000);
});
