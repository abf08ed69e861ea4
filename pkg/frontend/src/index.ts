/**
 * Thin binding over the girbench CLI for training-loop use.
 *
 * Images cross the process boundary as 8-bit binary PPM, so every result is
 * byte-identical to invoking the CLI by hand on the same quantized input.
 * Each call runs in a fresh subprocess with a private temp directory: there
 * is no shared state between sessions, and calls are safe from data-loader
 * worker processes.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { decodePpm, encodePpm } from "./ppm.js";
import { BoundImage, GirBenchError } from "./types.js";

export { BoundImage, GirBenchError } from "./types.js";
export { decodePpm, encodePpm, quantize } from "./ppm.js";

const MASK64 = (1n << 64n) - 1n;

/** splitmix64 finalizer; the binding's per-sample seed derivation. */
function mix64(x: bigint): bigint {
  x = (x + 0x9e3779b97f4a7c15n) & MASK64;
  x = ((x ^ (x >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  x = ((x ^ (x >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return x ^ (x >> 31n);
}

/** Deterministic 64-bit seed for one (seed, epoch, sample) triple. */
export function sampleSeed(
  seed: bigint | number,
  epochIndex: number,
  sampleIndex: number,
): bigint {
  let h = mix64(BigInt(seed) & MASK64);
  h = mix64(h ^ mix64(BigInt(epochIndex)));
  return mix64(h ^ mix64(BigInt(sampleIndex)));
}

export interface SessionOptions {
  /** CLI executable; defaults to `girbench` on PATH. */
  cliPath?: string;
}

function runCli(cliPath: string, args: string[]): string {
  try {
    return execFileSync(cliPath, args, { encoding: "utf-8" });
  } catch (err) {
    const e = err as { status?: number; stderr?: string | Buffer; message: string };
    const stderr = (e.stderr ?? "").toString();
    const firstLine = stderr.split("\n").find((l) => l.trim()) ?? e.message;
    throw new GirBenchError(firstLine.trim(), e.status ?? -1, stderr);
  }
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "girbench-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

const DUMMY: BoundImage = {
  height: 16,
  width: 16,
  data: new Float32Array(16 * 16 * 3).fill(0.5),
};

export class GirSession {
  private readonly cliPath: string;

  constructor(options: SessionOptions = {}) {
    this.cliPath = options.cliPath ?? "girbench";
  }

  /** Sample an order-k recipe; returns the recipe JSON text. */
  sampleRecipe(k: number, seed: bigint | number): string {
    if (!Number.isInteger(k) || k < 1 || k > 5) {
      throw new RangeError(`order k must be an integer in [1, 5], got ${k}`);
    }
    return withTempDir((dir) => {
      const inPath = join(dir, "in.ppm");
      const outPath = join(dir, "out.ppm");
      writeFileSync(inPath, encodePpm(DUMMY));
      runCli(this.cliPath, [
        "pipeline", "--in", inPath, "--out", outPath,
        "--order", String(k), "--seed", String(BigInt(seed) & MASK64),
      ]);
      return readFileSync(outPath + ".recipe.json", "utf-8");
    });
  }

  /** Apply a recipe JSON text to one image. */
  applyRecipe(image: BoundImage, recipeText: string): BoundImage {
    return withTempDir((dir) => {
      const inPath = join(dir, "in.ppm");
      const outPath = join(dir, "out.ppm");
      const recipePath = join(dir, "recipe.json");
      writeFileSync(inPath, encodePpm(image));
      writeFileSync(recipePath, recipeText);
      runCli(this.cliPath, [
        "pipeline", "--in", inPath, "--out", outPath, "--recipe", recipePath,
      ]);
      return decodePpm(readFileSync(outPath));
    });
  }

  /**
   * Degrade a batch of training patches on the fly.
   *
   * Every sample gets its own recipe, fully determined by
   * (seed, epochIndex, sampleIndices[i]); the recipe order is drawn uniformly
   * from [lo, hi]. Returns the degraded images alongside the recipe JSON
   * texts so training logs stay self-describing.
   */
  degradeBatch(
    images: BoundImage[],
    orderRange: [number, number],
    seed: bigint | number,
    epochIndex: number,
    sampleIndices: number[],
  ): { images: BoundImage[]; recipes: string[] } {
    const [lo, hi] = orderRange;
    if (!Number.isInteger(lo) || !Number.isInteger(hi) || lo < 1 || hi > 5 || lo > hi) {
      throw new RangeError(`order range must satisfy 1 <= lo <= hi <= 5, got [${lo}, ${hi}]`);
    }
    if (images.length !== sampleIndices.length) {
      throw new RangeError(
        `${images.length} images but ${sampleIndices.length} sample indices`,
      );
    }
    const outImages: BoundImage[] = [];
    const recipes: string[] = [];
    for (let i = 0; i < images.length; i++) {
      const derived = sampleSeed(seed, epochIndex, sampleIndices[i]);
      const k = lo + Number(mix64(derived ^ 0x5bf03635n) % BigInt(hi - lo + 1));
      withTempDir((dir) => {
        const inPath = join(dir, "in.ppm");
        const outPath = join(dir, "out.ppm");
        writeFileSync(inPath, encodePpm(images[i]));
        runCli(this.cliPath, [
          "pipeline", "--in", inPath, "--out", outPath,
          "--order", String(k), "--seed", String(derived),
        ]);
        outImages.push(decodePpm(readFileSync(outPath)));
        recipes.push(readFileSync(outPath + ".recipe.json", "utf-8"));
      });
    }
    return { images: outImages, recipes };
  }
}

const defaultSession = new GirSession();

export function sampleRecipe(k: number, seed: bigint | number): string {
  return defaultSession.sampleRecipe(k, seed);
}

export function applyRecipe(image: BoundImage, recipeText: string): BoundImage {
  return defaultSession.applyRecipe(image, recipeText);
}

export function degradeBatch(
  images: BoundImage[],
  orderRange: [number, number],
  seed: bigint | number,
  epochIndex: number,
  sampleIndices: number[],
): { images: BoundImage[]; recipes: string[] } {
  return defaultSession.degradeBatch(images, orderRange, seed, epochIndex, sampleIndices);
}
