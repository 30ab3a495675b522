"""Write the King James Bible (public domain) as one verse per line.

Reads the plain-text module of the pythonbible-kjv wheel:

    pip download pythonbible-kjv==0.0.2 --no-deps -d /tmp/kjv
    python3 scripts/extract_kjv.py /tmp/kjv/pythonbible_kjv-0.0.2-py3-none-any.whl data/kjv.txt
"""

import re
import sys
import zipfile

MODULE = "pythonbible_kjv/plain_text_bible.py"


def verses(source):
    text = source.split('"""', 2)[1]
    text = text.replace("[", "").replace("]", "")
    for verse in re.split(r"(?:^|\s)\d+\.\s", text):
        verse = " ".join(verse.split())
        if verse:
            yield verse


def main():
    if len(sys.argv) != 3:
        sys.exit("usage: extract_kjv.py <wheel> <out.txt>")
    with zipfile.ZipFile(sys.argv[1]) as wheel:
        source = wheel.read(MODULE).decode("utf-8")
    count = 0
    with open(sys.argv[2], "w", encoding="utf-8") as out:
        for verse in verses(source):
            out.write(verse + "\n")
            count += 1
    print(f"{count} verses", file=sys.stderr)


if __name__ == "__main__":
    main()
