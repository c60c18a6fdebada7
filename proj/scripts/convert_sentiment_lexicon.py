#!/usr/bin/env python3
"""Convert the Pattern/TextBlob English sentiment XML into the TSV lexicon format.

Usage: convert_sentiment_lexicon.py en-sentiment.xml > data/sentiment_lexicon.tsv

Per word form, polarity and subjectivity are averaged over all listed senses.
Only forms that survive tokenization intact ([a-z0-9']+) are kept.
"""
import re
import sys
import xml.etree.ElementTree as ET
from collections import defaultdict


def main(path):
    root = ET.parse(path).getroot()
    acc = defaultdict(lambda: [0.0, 0.0, 0])
    for w in root.iter("word"):
        form = w.get("form", "").strip().lower()
        if not re.fullmatch(r"[a-z0-9']+", form):
            continue
        entry = acc[form]
        entry[0] += float(w.get("polarity", 0))
        entry[1] += float(w.get("subjectivity", 0))
        entry[2] += 1
    print("# English sentiment lexicon: lemma<TAB>polarity<TAB>subjectivity")
    print("# Derived from the Pattern en-sentiment lexicon (De Smedt & Daelemans), license PDDL.")
    print("# Values are per-form means over senses.")
    for form in sorted(acc):
        pol, subj, n = acc[form]
        print(f"{form}\t{pol / n:.4f}\t{subj / n:.4f}")


if __name__ == "__main__":
    main(sys.argv[1])
