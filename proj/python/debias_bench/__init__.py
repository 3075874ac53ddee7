# Copyright 2026 The debias-bench Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Bias-mitigation benchmark for multi-label emotion classifiers."""

from debias_bench._core import (
    GRADCHECK_TOLERANCE,
    METHODS,
    AccessError,
    Dataset,
    DebiasError,
    InputError,
    TrainResult,
    amplify_bias,
    binarize,
    compute_reweights,
    dominant_filter,
    downsample_balance,
    dp_gap,
    eo_gaps,
    evaluate,
    gradcheck,
    hamming_acc,
    load_manifest,
    macro_f1,
    report,
    run_experiment,
    save_manifest,
    synth_generate,
    train,
    uses_bias_supervision,
)

__all__ = [
    "GRADCHECK_TOLERANCE",
    "METHODS",
    "AccessError",
    "Dataset",
    "DebiasError",
    "InputError",
    "TrainResult",
    "amplify_bias",
    "binarize",
    "compute_reweights",
    "dominant_filter",
    "downsample_balance",
    "dp_gap",
    "eo_gaps",
    "evaluate",
    "gradcheck",
    "hamming_acc",
    "load_manifest",
    "macro_f1",
    "report",
    "run_experiment",
    "save_manifest",
    "synth_generate",
    "train",
    "uses_bias_supervision",
]
