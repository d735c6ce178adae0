/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_classifier_free: (a: number, b: number) => void;
export const __wbg_featuremaps_free: (a: number, b: number) => void;
export const classifier_blockCount: (a: number) => number;
export const classifier_classNames: (a: number) => [number, number];
export const classifier_featureMaps: (a: number, b: number, c: number, d: number) => [number, number, number];
export const classifier_fromFiles: (a: number, b: number, c: number, d: number) => [number, number, number];
export const classifier_kind: (a: number) => [number, number];
export const classifier_predict: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const classifier_side: (a: number) => number;
export const classifier_trainAccuracy: (a: number) => [number, number];
export const classifier_trainToy: (a: number, b: number) => [number, number, number];
export const featuremaps_channels: (a: number) => number;
export const featuremaps_data: (a: number) => [number, number];
export const featuremaps_side: (a: number) => number;
export const rasterize: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
