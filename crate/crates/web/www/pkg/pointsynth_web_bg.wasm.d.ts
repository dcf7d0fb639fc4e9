/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_synthesizer_free: (a: number, b: number) => void;
export const kinds: () => [number, number];
export const sample: (a: number, b: number, c: number) => [number, number, number, number];
export const spectrum: (a: number, b: number, c: number) => [number, number, number, number];
export const synthesizer_done: (a: number) => number;
export const synthesizer_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const synthesizer_points: (a: number) => [number, number];
export const synthesizer_relative_energy: (a: number) => number;
export const synthesizer_stage: (a: number) => number;
export const synthesizer_stages: (a: number) => number;
export const synthesizer_step: (a: number, b: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
