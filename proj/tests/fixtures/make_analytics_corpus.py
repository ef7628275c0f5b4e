import json, datetime
from pathlib import Path
BASE = datetime.datetime(2024, 3, 1, 9, 0, 0)
def ts(m): return (BASE + datetime.timedelta(minutes=m)).strftime("%Y-%m-%dT%H:%M:%SZ")
def thread(repo, number, kind, title, labels, trigger, locked, comments, day=0):
    out = []
    for i, (who, assoc, minute, toxic, tbdfs, derail, body) in enumerate(comments):
        out.append({"id": f"{number}-{i}", "author_handle": who, "author_association": assoc,
                    "body": body, "created_at": ts(minute + day * 1440 * 30), "is_toxic": toxic,
                    "tbdfs": tbdfs, "is_derailment_point": derail})
    return {"repo": repo, "number": number, "kind": kind, "title": title, "labels": labels,
            "locked_reason": locked, "trigger": trigger, "comments": out}
N = "NONE"
T = []
T.append(thread("acme/widgets", 101, "issue", "Build fails on Windows", ["bug"], "failed_tool_code_error", "too heated", [
 ("kai-ext", N, 0, False, [], False, "The build fails on Windows with the latest release. Any idea what is wrong?"),
 ("lena-core", "MEMBER", 120, False, [], False, "Please share the full log so we can check."),
 ("kai-ext", N, 180, False, ["bitter_frustration"], True, "I already shared everything. Why do you need more?"),
 ("omar-dev", "COLLABORATOR", 200, False, [], False, "> I already shared everything.\nNot really, the log is cut off."),
 ("kai-ext", N, 230, True, ["insulting"], False, "@omar-dev you are clearly clueless about your own project."),
 ("lena-core", "MEMBER", 300, False, [], False, "Locking this thread."),
], day=0))
T.append(thread("acme/widgets", 102, "pull_request", "Add cache option", ["enhancement", "wontfix"], "technical_disagreement", "too heated", [
 ("rui-ext", N, 0, False, [], False, "This change adds a new config option for the cache."),
 ("mara-owner", "OWNER", 60, False, [], False, "We do not want more options here."),
 ("rui-ext", N, 90, False, ["impatience"], True, "This has been open for months. When will it be reviewed?"),
 ("tess-ext", N, 600, False, [], False, "Same here, I need this option."),
 ("mara-owner", "OWNER", 2000, True, ["mocking"], False, "> When will it be reviewed?\nNever, if you keep whining like this."),
 ("rui-ext", N, 2010, True, ["insulting", "bitter_frustration"], False, "What a rude maintainer."),
 ("jon-core", "MEMBER", 2100, False, [], False, "Please keep it civil."),
 ("tess-ext", N, 2200, False, [], False, "Thanks for the help."),
], day=1))
T.append(thread("acme/gadgets", 103, "issue", "Debug mode", ["question"], "communication_breakdown", "too heated", [
 ("ivy-ext", N, 0, False, [], False, "How do I enable the debug mode?"),
 ("pat-helper", "CONTRIBUTOR", 30, False, [], False, "Check the docs."),
 ("ivy-ext", N, 45, False, ["bitter_frustration"], True, "I did and they say nothing about it."),
 ("pat-helper", "CONTRIBUTOR", 45, True, ["insulting"], False, "@ivy-ext then you cannot read."),
 ("ivy-ext", N, 100, False, [], False, "Wow."),
], day=2))
T.append(thread("acme/gadgets", 104, "issue", "Crash on start", [], None, "too heated", [
 ("sam-ext", N, 0, False, [], False, "The app crashes on start."),
 ("nia-core", "MEMBER", 60, False, [], False, "Which version do you use?"),
 ("sam-ext", N, 120, True, ["vulgarity"], False, "Who cares, this crap is broken."),
 ("nia-core", "MEMBER", 200, False, [], False, "Please be polite."),
], day=3))
T.append(thread("acme/gadgets", 105, "pull_request", "Fix parser crash", ["bug", "help wanted"], None, "too heated", [
 ("nia-core", "MEMBER", 0, False, [], False, "Fix the crash in the parser."),
 ("zed-ext", N, 10140, True, ["entitlement"], False, "You should have done this ages ago, I expect better."),
 ("zed-ext", N, 10200, True, ["entitlement"], False, "Merge it now."),
], day=4))
T.append(thread("acme/gadgets", 106, "issue", "Rant", [], None, "too heated", [
 ("max-ext", N, 0, True, ["insulting"], False, "This project is garbage."),
 ("nia-core", "MEMBER", 10, False, [], False, "Closing."),
], day=5))
T.append(thread("acme/widgets", 201, "issue", "Dark theme", ["feature request"], None, None, [
 ("ana-ext", N, 0, False, [], False, "Is there a dark theme?"),
 ("lena-core", "MEMBER", 300, False, [], False, "Yes, see the settings page."),
], day=6))
T.append(thread("acme/widgets", 202, "issue", "Release notes", [], None, None, [
 ("lena-core", "MEMBER", 0, False, [], False, "Release notes for the next version."),
 ("bo-ext", N, 100, False, [], False, "> Release notes\nThanks, you really did a great job."),
 ("lena-core", "MEMBER", 200, False, [], False, "We appreciate it."),
], day=7))
T.append(thread("acme/widgets", 203, "issue", "Deleted discussion", [], None, None, [
 ("ghost", N, 0, False, [], False, "Deleted content one."),
 ("ghost", N, 40, False, [], False, "Deleted content two."),
 ("ghost", N, 80, False, [], False, "Deleted content three."),
 ("ghost", N, 120, False, [], False, "Deleted content four."),
], day=8))
T.append(thread("acme/gadgets", 204, "issue", "Slow tests", [], None, None, [
 ("eli-ext", N, 0, False, [], False, "Why is the test slow?"),
 ("omar-dev", "COLLABORATOR", 50, False, [], False, "Because it runs the full suite."),
 ("eli-ext", N, 80, False, [], False, "@omar-dev can you explain how to run one test?"),
 ("omar-dev", "COLLABORATOR", 100, False, [], False, "Use the filter flag."),
 ("eli-ext", N, 150, False, [], False, "That works, thank you."),
], day=9))
with open(Path(__file__).with_name("analytics_corpus.jsonl"), "w") as f:
    for t in T: f.write(json.dumps(t, ensure_ascii=False) + "\n")
