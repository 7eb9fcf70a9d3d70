#!/usr/bin/env python3
# Copyright 2026 The s2l Authors.
#
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
"""Generates the bundled E2E-style toy corpus under data/toy/.

The output is committed; rerunning with the same seed reproduces it.
"""

import argparse
import pathlib
import random

NAMES = [
    "Aromi", "Zizzi", "Cotto", "The Mill", "Wildwood", "Alimentum",
    "Browns Cambridge", "Clowns", "Cocum", "Fitzbillies", "Giraffe",
    "Green Man", "Loch Fyne", "Midsummer House", "Strada", "Blue Spice",
    "The Cambridge Blue", "The Golden Curry", "The Olive Grove", "The Phoenix",
    "The Plough", "The Punter", "The Twenty Two", "The Vaults", "The Waterman",
    "The Eagle", "The Rice Boat", "Bibimbap House", "The Cricketers",
    "Taste of Cambridge", "The Dumpling Tree", "The Wrestlers",
]
NEAR = [
    "Café Rouge", "Raja Indian Cuisine", "Express by Holiday Inn",
    "The Portland Arms", "Café Sicilia", "Burger King", "All Bar One",
    "Crowne Plaza Hotel", "Rainbow Vegetarian Café", "Avalon", "The Bakers",
    "Yippee Noodle Bar", "Ranch", "The Sorrento", "Café Brazil", "Clare Hall",
]
EAT_TYPE = ["restaurant", "pub", "coffee shop"]
FOOD = ["Italian", "French", "Chinese", "Indian", "Japanese", "English", "Fast food"]
PRICE = ["cheap", "moderate", "high", "less than £20", "£20-25", "more than £30"]
RATING = ["low", "average", "high", "1 out of 5", "3 out of 5", "5 out of 5"]
AREA = ["riverside", "city centre"]
FAMILY = ["yes", "no"]

OPTIONAL = [
    ("eatType", EAT_TYPE), ("food", FOOD), ("priceRange", PRICE),
    ("customer rating", RATING), ("area", AREA), ("familyFriendly", FAMILY),
    ("near", NEAR),
]


def make_table(rng):
    k = rng.randint(2, 7)
    chosen = sorted(rng.sample(range(len(OPTIONAL)), k))
    table = [("name", rng.choice(NAMES))]
    for i in chosen:
        slot, values = OPTIONAL[i]
        table.append((slot, rng.choice(values)))
    return table


def mr(table):
    return ", ".join(f"{k}[{v}]" for k, v in table)


def modifier(rng, slot, value):
    numeric = any(c.isdigit() for c in value)
    if slot == "food":
        return rng.choice([f"serving {value} food", f"that serves {value} food",
                           f"offering {value} food"])
    if slot == "priceRange":
        if numeric:
            return rng.choice([f"with a price range of {value}",
                               f"with prices {value}"])
        return rng.choice([f"with {value} prices", f"in the {value} price range"])
    if slot == "customer rating":
        if numeric:
            return rng.choice([f"rated {value}",
                               f"with a customer rating of {value}"])
        return rng.choice([f"with a {value} customer rating", f"rated {value} by customers"])
    if slot == "area":
        return rng.choice([f"in the {value} area", f"located in the {value}",
                           f"in {value}"])
    if slot == "familyFriendly":
        if value == "yes":
            return rng.choice(["which is family friendly", "that is kid friendly",
                               "and it is family friendly"])
        return rng.choice(["which is not family friendly", "that is not kid friendly",
                           "and it is not family friendly"])
    if slot == "near":
        return rng.choice([f"near {value}", f"close to {value}",
                           f"located near {value}"])
    raise ValueError(slot)


def reference(rng, table):
    slots = dict(table)
    # Human references occasionally leave a slot out.
    optional = [k for k, _ in table if k not in ("name", "eatType")]
    if optional and rng.random() < 0.1:
        del slots[rng.choice(optional)]
    name = slots["name"]
    head = f"{name} is a {slots['eatType']}" if "eatType" in slots else f"{name} is a place"
    mods = [modifier(rng, k, v) for k, v in table
            if k in slots and k not in ("name", "eatType")]
    rng.shuffle(mods)
    if len(mods) <= 2 or rng.random() < 0.5:
        return head + (" " + " and ".join(mods) if mods else "") + "."
    split = rng.randint(1, len(mods) - 1)
    first = head + " " + ", ".join(mods[:split]) + "."
    second = "It is " + " and ".join(m.replace("which is ", "").replace("that is ", "")
                                    for m in mods[split:]) + "."
    return first + " " + second


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent
                                             / "data" / "toy"))
    parser.add_argument("--seed", type=int, default=20201)
    parser.add_argument("--train", type=int, default=100)
    parser.add_argument("--unlabeled", type=int, default=400)
    parser.add_argument("--test", type=int, default=100)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = "# E2E-style toy corpus generated by tools/make_toy_corpus.py\n"
    with open(out / "train.tsv", "w", encoding="utf-8") as f:
        f.write(header)
        for _ in range(args.train):
            t = make_table(rng)
            f.write(f"{mr(t)}\t{reference(rng, t)}\n")
    with open(out / "unlabeled.txt", "w", encoding="utf-8") as f:
        f.write(header)
        for _ in range(args.unlabeled):
            f.write(mr(make_table(rng)) + "\n")
    with open(out / "test.tsv", "w", encoding="utf-8") as f:
        f.write(header)
        for _ in range(args.test):
            t = make_table(rng)
            f.write(f"{mr(t)}\t{reference(rng, t)}\n")


if __name__ == "__main__":
    main()
