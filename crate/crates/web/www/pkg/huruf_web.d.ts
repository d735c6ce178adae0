/* tslint:disable */
/* eslint-disable */

export class Classifier {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    featureMaps(pixels: Float64Array, block: number): FeatureMaps;
    /**
     * A model saved by `huruf train`: manifest text plus weight bytes.
     */
    static fromFiles(manifest: string, weights: Uint8Array): Classifier;
    /**
     * JSON `{label, class_index, probabilities, topk: [{name, probability}]}`.
     */
    predict(pixels: Float64Array, topk: number): string;
    /**
     * Trains the small stroke-direction model in the page.
     */
    static trainToy(epochs: number, seed: number): Classifier;
    readonly blockCount: number;
    readonly classNames: string[];
    readonly kind: string;
    readonly side: number;
    /**
     * Train accuracy per epoch; empty for loaded models.
     */
    readonly trainAccuracy: Float64Array;
}

export class FeatureMaps {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly channels: number;
    /**
     * `channels` grayscale tiles of `side²` bytes each.
     */
    readonly data: Uint8Array;
    readonly side: number;
}

/**
 * Convert a canvas `ImageData` buffer into model input.
 */
export function rasterize(rgba: Uint8Array, width: number, height: number, side: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_classifier_free: (a: number, b: number) => void;
    readonly __wbg_featuremaps_free: (a: number, b: number) => void;
    readonly classifier_blockCount: (a: number) => number;
    readonly classifier_classNames: (a: number) => [number, number];
    readonly classifier_featureMaps: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly classifier_fromFiles: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly classifier_kind: (a: number) => [number, number];
    readonly classifier_predict: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly classifier_side: (a: number) => number;
    readonly classifier_trainAccuracy: (a: number) => [number, number];
    readonly classifier_trainToy: (a: number, b: number) => [number, number, number];
    readonly featuremaps_channels: (a: number) => number;
    readonly featuremaps_data: (a: number) => [number, number];
    readonly featuremaps_side: (a: number) => number;
    readonly rasterize: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
