/* tslint:disable */
/* eslint-disable */

/**
 * Multiscale particle descent that can be advanced in small slices so the
 * page stays responsive.
 */
export class Synthesizer {
    free(): void;
    [Symbol.dispose](): void;
    done(): boolean;
    /**
     * `n` is the image resolution (power of two, at least 16).
     */
    constructor(observation: Float64Array, n: number, iterations_per_stage: number, seed: number);
    points(): Float64Array;
    /**
     * `2 E / |K(obs)|^2` after the last step (NaN before the first).
     */
    relative_energy(): number;
    /**
     * Index of the current width in the coarse-to-fine schedule.
     */
    stage(): number;
    stages(): number;
    /**
     * Runs up to `iterations` descent steps; returns `false` once every stage is done.
     */
    step(iterations: number): boolean;
}

/**
 * Generator kinds accepted by `sample`.
 */
export function kinds(): string[];

/**
 * One realization of a model with its default parameters.
 */
export function sample(kind: string, seed: number): Float64Array;

/**
 * Radial power spectrum `P(k)` for `k = 1..=k_max`.
 */
export function spectrum(points: Float64Array, k_max: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_synthesizer_free: (a: number, b: number) => void;
    readonly kinds: () => [number, number];
    readonly sample: (a: number, b: number, c: number) => [number, number, number, number];
    readonly spectrum: (a: number, b: number, c: number) => [number, number, number, number];
    readonly synthesizer_done: (a: number) => number;
    readonly synthesizer_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly synthesizer_points: (a: number) => [number, number];
    readonly synthesizer_relative_energy: (a: number) => number;
    readonly synthesizer_stage: (a: number) => number;
    readonly synthesizer_stages: (a: number) => number;
    readonly synthesizer_step: (a: number, b: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
