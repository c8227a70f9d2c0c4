"""Regenerates the CTG fixtures. Output is committed; rerun only to change them."""
import random

def walk(rng, value, lo, hi, step):
    value += rng.randint(-step, step)
    return max(lo, min(hi, value))

def write(path, rows, blank_every=0):
    rng = random.Random(7)
    mhr, toco, fhr = 85, 10, 140
    with open(path, "w", newline="\n") as out:
        out.write("Time,MHR,TOCO,FHR\n")
        for i in range(rows):
            mhr = walk(rng, mhr, 60, 120, 2)
            toco = walk(rng, toco, 0, 80, 3)
            fhr = walk(rng, fhr, 110, 170, 3)
            t = f"{i // 240:02d}:{(i // 4) % 60:02d}.{(i % 4) * 25:02d}"
            if blank_every and i % blank_every == blank_every - 1:
                out.write(f"{t},,,\n")
            else:
                out.write(f"{t},{mhr},{toco},{fhr}\n")

write("ctg_10min_4hz.csv", 10 * 60 * 4)
write("ctg_with_gaps.csv", 40, blank_every=5)
