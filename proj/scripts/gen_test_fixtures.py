#!/usr/bin/env python3
"""Regenerate the frozen reference fixtures under tests/data/.

Every fixture here comes from an implementation that is independent of the
C++ code under test:

  * tagger_oracle.jsonl   the reference averaged-perceptron tagging loop
                          (re-stated below) over the original pickled model
  * porter_oracle.tsv     NLTK's PorterStemmer in ORIGINAL_ALGORITHM mode
  * spm_unigram/          a sentencepiece model trained with the nmt_nfkc
                          rule, exported as tokenizer.json the way T5
                          checkpoints ship it (precompiled charsmap), with
                          ids from the `tokenizers` library
  * tiny_t5/, tiny_t5_gated/, tiny_bart/
                          randomly initialised HuggingFace models, their
                          `tokenizers` tokenizer.json, and teacher-forced
                          log-probabilities computed with PyTorch

Usage:
  python3 scripts/gen_test_fixtures.py --tagger-pickle trontagger-0.1.0.pickle

The tagger pickle ships inside the textblob-aptagger wheel.
"""
import argparse
import json
import math
import os
import pickle
import random
from collections import defaultdict

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "tests", "data")


# ---------------------------------------------------------------------------
# Averaged perceptron reference loop.


def _normalize(word):
    if "-" in word and word[0] != "-":
        return "!HYPHEN"
    if word.isdigit() and len(word) == 4:
        return "!YEAR"
    if word[0].isdigit():
        return "!DIGITS"
    return word.lower()


def _features(i, word, context, prev, prev2):
    features = defaultdict(int)

    def add(name, *args):
        features[" ".join((name,) + tuple(args))] += 1

    i += 2
    add("bias")
    add("i suffix", word[-3:])
    add("i pref1", word[0])
    add("i-1 tag", prev)
    add("i-2 tag", prev2)
    add("i tag+i-2 tag", prev, prev2)
    add("i word", context[i])
    add("i-1 tag+i word", prev, context[i])
    add("i-1 word", context[i - 1])
    add("i-1 suffix", context[i - 1][-3:])
    add("i-2 word", context[i - 2])
    add("i+1 word", context[i + 1])
    add("i+1 suffix", context[i + 1][-3:])
    add("i+2 word", context[i + 2])
    return features


def _predict(weights, classes, features):
    scores = defaultdict(float)
    for feat, value in features.items():
        if feat not in weights or value == 0:
            continue
        for label, weight in weights[feat].items():
            scores[label] += value * weight
    return max(classes, key=lambda label: (scores[label], label))


def reference_tag(model, words):
    weights, tagdict, classes = model
    prev, prev2 = "-START-", "-START2-"
    context = ["-START-", "-START2-"] + [_normalize(w) for w in words] + ["-END-", "-END2-"]
    tags = []
    for i, word in enumerate(words):
        tag = tagdict.get(word)
        if not tag:
            tag = _predict(weights, classes, _features(i, word, context, prev, prev2))
        tags.append(tag)
        prev2, prev = prev, tag
    return tags


TAGGER_SENTENCES = [
    "Deep learning",
    "the",
    "Deep learning works .",
    "Efficient keyphrase extraction ranks noun phrases by the probability of a prompt .",
    "A new approach to the state-of-the-art parsing of long documents was proposed in 2019 .",
    "The cats chase the dog while 42 birds sing in the old oak tree .",
    "Unsupervised methods select candidates with part-of-speech patterns and rank them .",
    "We evaluate the model on six benchmark datasets including news and scientific articles .",
    "Compatibility of systems of linear constraints over the set of natural numbers",
    "Criteria of compatibility of a system of linear Diophantine equations , strict inequations , and nonstrict inequations are considered .",
    "Upper bounds for components of a minimal set of solutions and algorithms of construction of minimal generating sets of solutions for all types of systems are given .",
    "These criteria and the corresponding algorithms for constructing a minimal supporting set of solutions can be used in solving all the considered types of systems and systems of mixed types .",
    "IBM 's research lab in Zurich published 3.5 million records , didn't it ?",
    "John ran quickly to the store ; however , the store was closed .",
]


def gen_tagger(pickle_path):
    with open(pickle_path, "rb") as f:
        model = pickle.load(f, encoding="latin1")
    out = os.path.join(DATA, "tagger_oracle.jsonl")
    with open(out, "w", encoding="utf-8") as f:
        for s in TAGGER_SENTENCES:
            words = s.split()
            f.write(json.dumps({"tokens": words, "tags": reference_tag(model, words)}) + "\n")
    return model


# ---------------------------------------------------------------------------
# Porter stemmer (original algorithm).


def gen_porter(model):
    from nltk.stem.porter import PorterStemmer

    stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
    words = set()
    for feat in model[0]:
        if feat.startswith("i word "):
            w = feat[len("i word "):]
            if w.isascii() and w.isalpha() and w.islower():
                words.add(w)
    for w in model[1]:
        lw = w.lower()
        if lw.isascii() and lw.isalpha():
            words.add(lw)
    words.update(["caresses", "ponies", "ties", "caress", "cats", "feed", "agreed",
                  "plastered", "bled", "motoring", "sing", "conflated", "troubled",
                  "sized", "hopping", "tanned", "falling", "hissing", "fizzed",
                  "failing", "filing", "happy", "sky", "relational", "conditional",
                  "rational", "valenci", "hesitanci", "digitizer", "conformabli",
                  "radicalli", "differentli", "vileli", "analogousli", "vietnamization",
                  "predication", "operator", "feudalism", "decisiveness", "hopefulness",
                  "callousness", "formaliti", "sensitiviti", "sensibiliti", "triplicate",
                  "formative", "formalize", "electriciti", "electrical", "hopeful",
                  "goodness", "revival", "allowance", "inference", "airliner",
                  "gyroscopic", "adjustable", "defensible", "irritant", "replacement",
                  "adjustment", "dependent", "adoption", "homologou", "communism",
                  "activate", "angulariti", "homologous", "effective", "bowdlerize",
                  "probate", "rate", "cease", "controll", "roll", "generalizations",
                  "oscillators", "learning", "networks", "neural", "deep", "a", "is",
                  "as", "ai", "news", "proceedings"])
    words = sorted(words)
    rng = random.Random(1234)
    if len(words) > 6000:
        keep = set(rng.sample(words, 6000))
        keep.update(w for w in words if len(w) <= 3 or w in ("caresses", "relational"))
        words = sorted(keep)
    out = os.path.join(DATA, "porter_oracle.tsv")
    with open(out, "w", encoding="utf-8") as f:
        for w in words:
            f.write(f"{w}\t{stemmer.stem(w)}\n")


# ---------------------------------------------------------------------------
# Tiny encoder-decoder models.

WORDS = (
    "the a of to and in is for on with by as this that model models document documents "
    "keyphrase keyphrases extraction candidate candidates noun phrase phrases rank ranking "
    "probability prompt template encoder decoder position penalty length long short text "
    "book paper news passage mainly talks about focuses attention deep learning neural network "
    "networks language graph method methods approach data set sets system systems linear "
    "equation equations solution solutions minimal algorithm algorithms natural numbers "
    "compatibility constraints criteria science scientific article articles benchmark "
    "evaluation unsupervised supervised embedding embeddings similarity score scores"
).split()


def corpus_lines(n, seed):
    rng = random.Random(seed)
    lines = []
    for _ in range(n):
        k = rng.randint(4, 16)
        words = [rng.choice(WORDS) for _ in range(k)]
        if rng.random() < 0.5:
            words[0] = words[0].capitalize()
        line = " ".join(words)
        if rng.random() < 0.6:
            line += rng.choice([".", ",", "!", "?", ":"])
        if rng.random() < 0.2:
            line = f'Book:"{line}"'
        lines.append(line)
    return lines


CASES = [
    ('Book:"Deep learning models rank keyphrase candidates by prompt probability."',
     "This book mainly talks about ", "keyphrase candidates"),
    ('Book:"Deep learning models rank keyphrase candidates by prompt probability."',
     "This book mainly talks about ", "prompt probability"),
    ('Book:"Deep learning models rank keyphrase candidates by prompt probability."',
     "This book mainly talks about ", "Deep learning models"),
    ('Book:"Compatibility of systems of linear constraints over the set of natural numbers."',
     "", "linear constraints"),
    ('Passage:"Minimal   solutions\nof linear equations and the algorithms."',
     "Keywords are ", "minimal solutions"),
    ('Book:"short text"', "This book mainly talks about ", "text"),
]

TOKENIZE_PROBES = [
    "This book mainly talks about ",
    "This book mainly talks about keyphrase candidates",
    "Deep learning",
    "  leading and   trailing  ",
    "zebra quixotic ünïcode",
    'Book:"A, b! c?"',
    "evaluation123 of models",
    "",
]


def long_case_text(seed):
    rng = random.Random(seed)
    return 'Book:"' + " ".join(rng.choice(WORDS) for _ in range(220)) + '."'


def gen_t5(name, gated):
    import torch
    from tokenizers import Regex, Tokenizer, models, normalizers, pre_tokenizers, trainers, processors, decoders
    from transformers import T5Config, T5ForConditionalGeneration

    out_dir = os.path.join(DATA, name)
    os.makedirs(out_dir, exist_ok=True)

    tok = Tokenizer(models.Unigram())
    tok.normalizer = normalizers.Sequence([normalizers.Strip(), normalizers.Replace(Regex(" {2,}"), " ")])
    tok.pre_tokenizer = pre_tokenizers.Metaspace()
    tok.decoder = decoders.Metaspace()
    trainer = trainers.UnigramTrainer(vocab_size=320, special_tokens=["<pad>", "</s>", "<unk>"],
                                      unk_token="<unk>", shrinking_factor=0.75)
    tok.train_from_iterator(corpus_lines(3000, 7), trainer=trainer)
    tok.post_processor = processors.TemplateProcessing(single="$A </s>", special_tokens=[("</s>", 1)])
    tok.save(os.path.join(out_dir, "tokenizer.json"))
    assert tok.token_to_id("<pad>") == 0 and tok.token_to_id("</s>") == 1

    torch.manual_seed(11 if gated else 5)
    cfg = T5Config(vocab_size=tok.get_vocab_size(), d_model=32, d_kv=8, d_ff=64,
                   num_layers=2, num_decoder_layers=3, num_heads=4,
                   relative_attention_num_buckets=32, relative_attention_max_distance=128,
                   feed_forward_proj="gated-gelu" if gated else "relu",
                   tie_word_embeddings=not gated, decoder_start_token_id=0,
                   pad_token_id=0, eos_token_id=1, dropout_rate=0.0)
    model = T5ForConditionalGeneration(cfg).eval()
    with torch.no_grad():
        for p in model.parameters():
            p.mul_(3.0)
    model.save_pretrained(out_dir, safe_serialization=True)

    cases = list(CASES) + [(long_case_text(3), "This book mainly talks about ", "deep learning")]
    ref = {"cases": [], "tokenize": [], "buckets": {}}
    for text in TOKENIZE_PROBES:
        ref["tokenize"].append({"text": text, "ids": tok.encode(text, add_special_tokens=False).ids})

    for enc_text, prefix, cand in cases:
        enc_ids = tok.encode(enc_text).ids
        max_len = 64
        if len(enc_ids) > max_len:
            enc_ids = enc_ids[: max_len - 1] + [1]
        target = tok.encode(prefix + cand, add_special_tokens=False).ids
        dec = [0] + target
        with torch.no_grad():
            logits = model(input_ids=torch.tensor([enc_ids]),
                           decoder_input_ids=torch.tensor([dec[:-1]])).logits[0]
            logp = torch.log_softmax(logits.double(), dim=-1)
        target_lp = [float(logp[t, dec[t + 1]]) for t in range(len(dec) - 1)]
        ref["cases"].append({"encoder_text": enc_text, "prefix": prefix, "candidate": cand,
                             "encoder_max_tokens": max_len, "encoder_ids": enc_ids,
                             "decoder_ids": dec, "target_logprobs": target_lp,
                             "row0_logsumexp_check": float(torch.logsumexp(logp[0], 0))})

    from transformers.models.t5.modeling_t5 import T5Attention
    rel = torch.arange(-300, 301)
    for bidir in (True, False):
        b = T5Attention._relative_position_bucket(rel, bidirectional=bidir, num_buckets=32, max_distance=128)
        ref["buckets"]["bidirectional" if bidir else "causal"] = b.tolist()
    ref["buckets"]["relative_positions"] = rel.tolist()

    with open(os.path.join(out_dir, "reference.json"), "w") as f:
        json.dump(ref, f, indent=1)


def gen_bart():
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers, trainers, processors, decoders
    from transformers import BartConfig, BartForConditionalGeneration

    out_dir = os.path.join(DATA, "tiny_bart")
    os.makedirs(out_dir, exist_ok=True)

    tok = Tokenizer(models.BPE())
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(vocab_size=420, special_tokens=["<s>", "<pad>", "</s>", "<unk>"],
                                  initial_alphabet=pre_tokenizers.ByteLevel.alphabet())
    tok.train_from_iterator(corpus_lines(3000, 9), trainer=trainer)
    tok.post_processor = processors.RobertaProcessing(sep=("</s>", 2), cls=("<s>", 0),
                                                      trim_offsets=True, add_prefix_space=False)
    tok.save(os.path.join(out_dir, "tokenizer.json"))

    torch.manual_seed(17)
    cfg = BartConfig(vocab_size=tok.get_vocab_size(), d_model=32, encoder_layers=2, decoder_layers=2,
                     encoder_attention_heads=4, decoder_attention_heads=4,
                     encoder_ffn_dim=64, decoder_ffn_dim=64, max_position_embeddings=128,
                     dropout=0.0, attention_dropout=0.0, activation_dropout=0.0,
                     scale_embedding=False, pad_token_id=1, bos_token_id=0, eos_token_id=2,
                     decoder_start_token_id=2, forced_eos_token_id=2)
    model = BartForConditionalGeneration(cfg).eval()
    with torch.no_grad():
        for p in model.parameters():
            p.mul_(4.0)
        model.final_logits_bias.normal_(0.0, 0.5)
    model.save_pretrained(out_dir, safe_serialization=True)

    ref = {"cases": [], "tokenize": []}
    for text in TOKENIZE_PROBES:
        ref["tokenize"].append({"text": text, "ids": tok.encode(text, add_special_tokens=False).ids})
    cases = list(CASES) + [(long_case_text(4), "This book mainly talks about ", "deep learning")]
    for enc_text, prefix, cand in cases:
        enc_ids = tok.encode(enc_text).ids
        max_len = 96
        if len(enc_ids) > max_len:
            enc_ids = enc_ids[: max_len - 1] + [2]
        target = tok.encode(prefix + cand, add_special_tokens=False).ids
        dec = [2, 0] + target
        with torch.no_grad():
            logits = model(input_ids=torch.tensor([enc_ids]),
                           decoder_input_ids=torch.tensor([dec[:-1]])).logits[0]
            logp = torch.log_softmax(logits.double(), dim=-1)
        target_lp = [float(logp[t, dec[t + 1]]) for t in range(len(dec) - 1)]
        ref["cases"].append({"encoder_text": enc_text, "prefix": prefix, "candidate": cand,
                             "encoder_max_tokens": max_len, "encoder_ids": enc_ids,
                             "decoder_ids": dec, "target_logprobs": target_lp})
    with open(os.path.join(out_dir, "reference.json"), "w") as f:
        json.dump(ref, f, indent=1)


SPM_PROBES = TOKENIZE_PROBES + [
    "\u201cQuoted\u201d \ufb01ne \uff26\uff35\uff2c\uff2c  width",
    "Cafe\u0301 na\u00efve r\u00e9sum\u00e9",
    "tabs\tand\nnewlines \u00a0nbsp",
    "snow \u2603\u2603 man",
    "encoder\u2013decoder \u2026 \u00bd",
    "\u2460 circled \u33a1 \u2122",
]


def gen_spm_unigram():
    import base64
    import tempfile
    import sentencepiece as spm
    from sentencepiece import sentencepiece_model_pb2 as pb
    from tokenizers import Regex, Tokenizer, models, normalizers, pre_tokenizers

    out_dir = os.path.join(DATA, "spm_unigram")
    os.makedirs(out_dir, exist_ok=True)
    lines = corpus_lines(2000, 21) + ["\u201cQuoted\u201d \ufb01ne \uff26\uff35\uff2c\uff2c caf\u00e9 na\u00efve"] * 30
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "corpus.txt")
        with open(src, "w") as f:
            f.write("\n".join(lines))
        spm.SentencePieceTrainer.train(input=src, model_prefix=os.path.join(tmp, "m"), vocab_size=300,
                                       model_type="unigram", normalization_rule_name="nmt_nfkc",
                                       pad_id=0, eos_id=1, unk_id=2, bos_id=-1,
                                       character_coverage=0.9995, hard_vocab_limit=False,
                                       minloglevel=2)
        proto = pb.ModelProto()
        with open(os.path.join(tmp, "m.model"), "rb") as f:
            proto.ParseFromString(f.read())
        sp = spm.SentencePieceProcessor(model_file=os.path.join(tmp, "m.model"))

    vocab = [(p.piece, p.score) for p in proto.pieces]
    tok = Tokenizer(models.Unigram(vocab, unk_id=2, byte_fallback=False))
    tok.normalizer = normalizers.Sequence([
        normalizers.Precompiled(proto.normalizer_spec.precompiled_charsmap),
        normalizers.Replace(Regex(" {2,}"), " "),
    ])
    tok.pre_tokenizer = pre_tokenizers.Sequence([
        pre_tokenizers.WhitespaceSplit(),
        pre_tokenizers.Metaspace(replacement="\u2581", prepend_scheme="always", split=True),
    ])
    tok.save(os.path.join(out_dir, "tokenizer.json"))

    ref = {"tokenize": []}
    for text in SPM_PROBES:
        ref["tokenize"].append({"text": text, "ids": tok.encode(text, add_special_tokens=False).ids,
                                "sentencepiece_ids": sp.encode(text)})
    with open(os.path.join(out_dir, "reference.json"), "w") as f:
        json.dump(ref, f, indent=1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tagger-pickle", required=True)
    args = ap.parse_args()
    os.makedirs(DATA, exist_ok=True)
    model = gen_tagger(args.tagger_pickle)
    gen_porter(model)
    gen_t5("tiny_t5", gated=False)
    gen_t5("tiny_t5_gated", gated=True)
    gen_bart()
    gen_spm_unigram()


if __name__ == "__main__":
    main()
