/** A 3-channel float image in [0, 1], row-major (height, width, 3). */
export interface BoundImage {
  height: number;
  width: number;
  data: Float32Array;
}

/** Raised when the CLI exits non-zero; carries its stderr diagnostics. */
export class GirBenchError extends Error {
  readonly exitCode: number;
  readonly stderr: string;

  constructor(message: string, exitCode: number, stderr: string) {
    super(message);
    this.name = "GirBenchError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}
