#!/usr/bin/env python3
"""Convert a pickled averaged-perceptron tagger model (weights, tagdict, classes)
into the JSON weights file read by promptrank::PerceptronTagger.

The pickle layout is the one written by the textblob-aptagger / NLTK
PerceptronTagger training code: a tuple (weights, tagdict, classes) where
weights maps feature string -> {tag: weight}.
"""
import argparse
import json
import pickle


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("pickle_path")
    ap.add_argument("out_path")
    args = ap.parse_args()

    with open(args.pickle_path, "rb") as f:
        weights, tagdict, classes = pickle.load(f, encoding="latin1")

    # Feature and per-feature tag order is kept as stored; the tagger sums
    # scores in this order.
    doc = {
        "format": "promptrank-perceptron-tagger",
        "version": 1,
        "classes": sorted(classes),
        "tagdict": dict(sorted(tagdict.items())),
        "weights": {feat: dict(w) for feat, w in weights.items() if w},
    }
    with open(args.out_path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, separators=(",", ":"))


if __name__ == "__main__":
    main()
