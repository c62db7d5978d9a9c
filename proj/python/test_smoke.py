"""Smoke test for the _storyreel extension module.

Run via ctest with STORYREEL_MODULE_DIR pointing at the built module, or with
an installed storyreel wheel on sys.path.
"""

import json
import os
import sys

module_dir = os.environ.get("STORYREEL_MODULE_DIR")
if module_dir:
    sys.path.insert(0, module_dir)

try:
    import _storyreel as sr
except ImportError:
    from storyreel import _storyreel as sr


def check(cond, message):
    if not cond:
        raise AssertionError(message)


def main():
    check(sr.sample_keyframes(16, 5.0) == [0, 2, 4, 6, 8, 10, 12, 15],
          "keyframe sampling mismatch")
    check(sr.sample_keyframes(1, 5.0) == [0], "single-frame clip")

    check(abs(sr.aggregate([4.50, 4.00, 3.20]) - 3.90) < 1e-9, "aggregate")
    check(abs(sr.aggregate([3.33, 3.00, 2.17]) - 2.83) < 1e-9, "aggregate")

    parsed = json.loads(sr.extract_structured('noise {"score": 4} noise'))
    check(parsed == {"score": 4}, "extract_structured")
    try:
        sr.extract_structured("no json here")
        raise AssertionError("extract_structured should have raised")
    except sr.StoryreelError:
        pass

    board = {
        "schema_version": "1",
        "script": {
            "genre": "adventure",
            "logline": "l",
            "characters": [{"name": "Mara", "role": "lead",
                            "appearance": "a", "personality": "p"}],
            "storyline": "s",
            "source_outline_digest": sr.sha256_hex("outline"),
        },
        "scenes": [{"index": 1, "location": "ridge", "time_of_day": "dusk",
                    "plot": "p", "characters": ["Mara"], "objective": "o"}],
        "shots": [{"scene_index": 1, "shot_index": 1,
                   "shot_type": "scene_end", "content": "c",
                   "characters": ["Mara"]}],
    }
    text = json.dumps(board)
    check(sr.validate_storyboard(text) == [], "valid storyboard rejected")
    check(sr.storyboard_roundtrip(sr.storyboard_roundtrip(text)) ==
          sr.storyboard_roundtrip(text), "canonical form not a fixed point")
    board["shots"][0]["shot_type"] = "scene_start"
    check(sr.validate_storyboard(json.dumps(board)) != [],
          "single-shot scene must end with scene_end")

    check(sr.hits_stoplist("a wide shot of a barn", sr.default_stoplist()),
          "stoplist hit missed")
    check(not sr.hits_stoplist("gunshots echo worldwide", sr.default_stoplist()),
          "stoplist matched inside words")

    check(sr.criteria() == ["script_consistency", "camera_movement_consistency",
                            "video_quality", "real_movie_similarity"],
          "criterion names")

    template_dir = os.environ.get("STORYREEL_TEMPLATE_DIR")
    if template_dir:
        doc, key = sr.gen_questionnaire(["ours", "base"], ["c1", "c2"], 3,
                                        template_dir)
        check("ours" not in doc, "questionnaire leaks method names")
        mapping = json.loads(key)
        check(set(mapping) == {"c1", "c2"}, "questionnaire key cases")
        for labels in mapping.values():
            check(sorted(labels.values()) == ["base", "ours"],
                  "questionnaire key bijection")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
