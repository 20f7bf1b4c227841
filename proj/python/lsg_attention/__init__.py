# Copyright 2026 The LSG Attention Authors
# SPDX-License-Identifier: Apache-2.0
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

"""Blocked local, sparse and global attention (C++ core)."""

from ._core import (
    Attention,
    Config,
    ConfigError,
    FormatError,
    IoError,
    NumericError,
    ShapeError,
    convert_bundle,
    extend_positional,
    full_attention,
    init_globals,
    key_width,
    load_bundle,
    max_context,
    run_checks,
    save_bundle,
    score_entry_count,
    write_toy_bundle,
)

__all__ = [
    "Attention",
    "Config",
    "ConfigError",
    "FormatError",
    "IoError",
    "NumericError",
    "ShapeError",
    "convert_bundle",
    "extend_positional",
    "full_attention",
    "init_globals",
    "key_width",
    "load_bundle",
    "max_context",
    "run_checks",
    "save_bundle",
    "score_entry_count",
    "write_toy_bundle",
]
