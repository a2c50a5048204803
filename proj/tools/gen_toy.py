#!/usr/bin/env python3
# Copyright 2026 The pathq Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the toy6 and toy30 fixtures under data/."""

import argparse
import pathlib
import random

TOY6 = {
    "train": [
        ("alice", "knows", "bob"),
        ("bob", "knows", "carol"),
        ("carol", "knows", "dave"),
        ("alice", "likes", "erin"),
        ("bob", "likes", "erin"),
        ("erin", "knows", "frank"),
        ("dave", "likes", "alice"),
    ],
    "valid": [
        ("alice", "knows", "carol"),
        ("frank", "likes", "bob"),
    ],
    "test": [
        ("carol", "likes", "frank"),
        ("bob", "knows", "dave"),
    ],
}


def toy30(seed):
    """5 clusters of 6; relation k links cluster c to every member of cluster c+k+1."""
    clusters, size = 5, 6
    triples = []
    for k in range(clusters):
        for c in range(clusters):
            target = (c + k + 1) % clusters
            for i in range(size):
                for j in range(size):
                    triples.append((f"c{c}_e{i}", f"shift{k + 1}", f"c{target}_e{j}"))
    rng = random.Random(seed)
    rng.shuffle(triples)
    n_valid = n_test = len(triples) // 10
    return {
        "valid": sorted(triples[:n_valid]),
        "test": sorted(triples[n_valid:n_valid + n_test]),
        "train": sorted(triples[n_valid + n_test:]),
    }


def write(root, name, parts):
    out = root / name
    out.mkdir(parents=True, exist_ok=True)
    for part, rows in parts.items():
        with open(out / f"{part}.tsv", "w") as f:
            for h, r, t in rows:
                f.write(f"{h}\t{r}\t{t}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default=pathlib.Path(__file__).resolve().parent.parent / "data",
                    type=pathlib.Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    write(args.root, "toy6", TOY6)
    write(args.root, "toy30", toy30(args.seed))


if __name__ == "__main__":
    main()
