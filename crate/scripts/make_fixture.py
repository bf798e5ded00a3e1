#!/usr/bin/env python3
"""Regenerate the synthetic ontology/annotation/case fixtures under
crates/core/tests/data. Output is deterministic for a given seed.

Usage: python3 scripts/make_fixture.py [outdir]
"""
import random
import sys
from pathlib import Path

SEED = 20230606
LIVE_TERMS = 500
OBSOLETE_TERMS = 12

ORGANS = [
    "skeletal system", "nervous system", "eye", "ear", "heart", "kidney",
    "liver", "skin", "immune system", "blood", "muscle", "lung",
    "endocrine system", "metabolism", "face", "limbs", "genitourinary system",
    "digestive system",
]
ADJ = ["Increased", "Decreased", "Abnormal", "Progressive", "Congenital",
       "Recurrent", "Severe", "Mild", "Focal", "Generalized", "Episodic",
       "Bilateral"]
NOUN = ["density", "size", "morphology", "function", "tone", "signal",
        "thickness", "volume", "reflex", "pigmentation", "calcification",
        "cyst", "atrophy", "hypoplasia", "dysplasia", "inflammation"]
DISEASE_WORDS = ["Ardent", "Belmont", "Corvin", "Dalston", "Everly", "Fenwick",
                 "Garrow", "Hollis", "Ivers", "Jessop", "Kellan", "Lorne",
                 "Marlow", "Norcott", "Oakes", "Pellam", "Quarry", "Rowan",
                 "Selby", "Thorne", "Upton", "Varley", "Wexford", "Yarrow"]


def hp(n):
    return f"HP:{n:07d}"


def main(outdir):
    rng = random.Random(SEED)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    # -- ontology ---------------------------------------------------------
    terms = []  # (id, name, parents, synonyms)
    terms.append((hp(1), "All", [], []))
    terms.append((hp(118), "Phenotypic abnormality", [hp(1)], ["Organ abnormality"]))
    terms.append((hp(5), "Mode of inheritance", [hp(1)], []))
    terms.append((hp(6), "Autosomal dominant inheritance", [hp(5)], ["Autosomal dominant"]))
    terms.append((hp(7), "Autosomal recessive inheritance", [hp(5)], ["Autosomal recessive"]))
    organ_ids = []
    next_id = 1000
    for organ in ORGANS:
        tid = hp(next_id)
        next_id += 7
        terms.append((tid, f"Abnormality of the {organ}", [hp(118)], [f"{organ.capitalize()} anomaly"]))
        organ_ids.append(tid)
    branch_of = {tid: i for i, tid in enumerate(organ_ids)}
    names = {t[1] for t in terms}
    while len(terms) < LIVE_TERMS:
        organ_idx = rng.randrange(len(ORGANS))
        # pick a parent from the same branch (organ term or an existing descendant)
        candidates = [t[0] for t in terms if branch_of.get(t[0]) == organ_idx]
        parent = rng.choice(candidates)
        parents = [parent]
        if rng.random() < 0.12:
            other = rng.choice([t[0] for t in terms if t[0] in branch_of and t[0] != parent])
            if other not in parents:
                parents.append(other)
        while True:
            name = f"{rng.choice(ADJ)} {ORGANS[organ_idx]} {rng.choice(NOUN)}"
            if name not in names:
                break
            name = f"{name} {rng.randrange(2, 99)}"
            if name not in names:
                break
        names.add(name)
        tid = hp(next_id)
        next_id += rng.randrange(1, 9)
        syns = [f"{name.lower()} variant"] if rng.random() < 0.3 else []
        terms.append((tid, name, parents, syns))
        branch_of[tid] = organ_idx
    live_ids = [t[0] for t in terms]
    leaf_ids = sorted(set(live_ids) - {p for t in terms for p in t[2]})

    obsolete = []
    for i in range(OBSOLETE_TERMS):
        tid = hp(900000 + i)
        repl = rng.choice(leaf_ids) if i % 2 == 0 else None
        obsolete.append((tid, f"obsolete Former term {i}", repl))

    lines = [
        "format-version: 1.2",
        "data-version: hp/releases/fixture-2023-06-06",
        "saved-by: fixture generator",
        "default-namespace: human_phenotype",
        "ontology: hp",
        "",
    ]
    order = terms[:]
    rng.shuffle(order)
    pp_edges = 0
    for tid, name, parents, syns in order:
        lines.append("[Term]")
        lines.append(f"id: {tid}")
        lines.append(f"name: {name}")
        lines.append(f'def: "Synthetic definition for {name}." [HPO:fixture]')
        for s in syns:
            lines.append(f'synonym: "{s}" EXACT layperson []')
        lines.append(f"xref: UMLS:C{rng.randrange(10**6, 10**7)}")
        for p in parents:
            pname = next(t[1] for t in terms if t[0] == p)
            lines.append(f"is_a: {p} ! {pname}")
            pp_edges += 1
        if rng.random() < 0.05 and parents:
            lines.append(f"relationship: part_of {parents[0]}")
        lines.append("")
    for tid, name, repl in obsolete:
        lines.append("[Term]")
        lines.append(f"id: {tid}")
        lines.append(f"name: {name}")
        lines.append("is_obsolete: true")
        if repl:
            lines.append(f"replaced_by: {repl}")
        lines.append("")
    lines += ["[Typedef]", "id: part_of", "name: part of", "is_transitive: true", ""]
    (out / "hp_fixture.obo").write_text("\n".join(lines))

    # -- annotations --------------------------------------------------------
    leaves_by_branch = {}
    for tid in leaf_ids:
        leaves_by_branch.setdefault(branch_of.get(tid, -1), []).append(tid)
    desc_by_branch = {}
    for tid in live_ids:
        if tid in branch_of:
            desc_by_branch.setdefault(branch_of[tid], []).append(tid)

    diseases = []  # (code, name, [terms])
    disease_names = []
    for i in range(30):
        disease_names.append(f"{DISEASE_WORDS[i % len(DISEASE_WORDS)]} syndrome type {i // len(DISEASE_WORDS) + 1}")
    for i, name in enumerate(disease_names):
        home = i % len(ORGANS)
        second = (i * 7 + 3) % len(ORGANS)
        pool = desc_by_branch[home] + desc_by_branch[second][:10]
        k = rng.randrange(6, 12)
        chosen = rng.sample(pool, min(k, len(pool)))
        chosen.append(hp(6) if i % 2 else hp(7))
        diseases.append((f"OMIM:{600000 + i * 37}", name, chosen))

    hpoa = [
        "#description: \"fixture phenotype annotations\"",
        "#version: fixture-2023-06-06",
        "#tracker: https://example.invalid/hpo-annotation-data/issues",
        "#hpo-version: hp/releases/fixture-2023-06-06",
        "database_id\tdisease_name\tqualifier\thpo_id\treference\tevidence\tonset\tfrequency\tsex\tmodifier\taspect\tbiocuration",
    ]

    def row(code, name, term, qualifier=""):
        aspect = "I" if term in (hp(6), hp(7)) else "P"
        freq = rng.choice(["", "HP:0040281", "HP:0040282", "3/7"])
        return f"{code}\t{name}\t{qualifier}\t{term}\tPMID:{rng.randrange(10**6, 10**7)}\tPCS\t\t{freq}\t\t\t{aspect}\tHPO:fixture[2023-01-01]"

    for code, name, chosen in diseases:
        for t in chosen:
            hpoa.append(row(code, name, t))
        # one negated row per disease
        hpoa.append(row(code, name, rng.choice(leaf_ids), "NOT"))
    # Orphanet: 8 codes reuse OMIM names (consolidation by name), 6 new diseases
    for i in range(8):
        code, name, chosen = diseases[i * 3]
        orpha = f"ORPHA:{1000 + i * 11}"
        extra = rng.sample(chosen, 3) + [rng.choice(leaf_ids)]
        for t in extra:
            hpoa.append(row(orpha, name.upper() if i % 2 else name, t))
    for i in range(6):
        name = f"{DISEASE_WORDS[(i * 5 + 2) % len(DISEASE_WORDS)]} dysplasia"
        orpha = f"ORPHA:{2000 + i * 13}"
        home = (i * 5) % len(ORGANS)
        chosen = rng.sample(desc_by_branch[home], 7)
        diseases.append((orpha, name, chosen))
        for t in chosen:
            hpoa.append(row(orpha, name, t))
    # obsolete references: one with replacement, one without
    hpoa.append(row(diseases[1][0], diseases[1][1], obsolete[0][0]))
    hpoa.append(row(diseases[2][0], diseases[2][1], obsolete[1][0]))
    # unknown database prefix is skipped
    hpoa.append(row("DECIPHER:17", "Deletion syndrome", leaf_ids[0]))
    (out / "phenotype_fixture.hpoa").write_text("\n".join(hpoa) + "\n")

    ccrd = []
    for i in range(4):
        code, name, chosen = diseases[i * 5 + 1]
        for t in rng.sample(chosen, 4):
            ccrd.append(f"CCRD:{i + 1:03d}\t{name}\t{t}")
    new_name = "Wexford leukodystrophy"
    chosen = rng.sample(desc_by_branch[1], 6)
    for t in chosen:
        ccrd.append(f"CCRD:099\t{new_name}\t{t}")
    (out / "ccrd_fixture.tsv").write_text("\n".join(ccrd[:10]) + "\n\n" + "\n".join(ccrd[10:]) + "\n")

    # -- cases ----------------------------------------------------------------
    cases = ["# case_id\tphenotypes\tgold\tsource"]
    seen = set()
    n = 0
    for rep in range(2):
        for code, name, chosen in diseases:
            specific = [t for t in chosen if t not in (hp(6), hp(7))]
            for _ in range(20):
                k = rng.randrange(3, min(6, len(specific)) + 1)
                picked = tuple(sorted(rng.sample(specific, k)))
                if picked not in seen:
                    break
            seen.add(picked)
            n += 1
            cases.append(f"FX{n:03d}\t{','.join(picked)}\t{code}\tFIXTURE")
    # cases with fewer than three phenotypes are filtered on load
    for i in range(3):
        code, name, chosen = diseases[i]
        cases.append(f"FXS{i + 1}\t{','.join(chosen[:2])}\t{code}\tFIXTURE")
    (out / "cases_fixture.tsv").write_text("\n".join(cases) + "\n")

    print(f"live terms={len(terms)} obsolete={len(obsolete)} pp_edges={pp_edges} "
          f"diseases={len(diseases)} cases={n}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data")
