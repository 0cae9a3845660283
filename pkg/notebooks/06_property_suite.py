# %% [markdown]
# # The property suite
#
# Each line is one invariant, its worst measured defect and its threshold.
# The same report is available as ``lieobs verify <selector>``.

# %%
from lieobs.verify import format_report, run_property_suite

for selector in ("explog", "pia", "lemma8"):
    print(format_report(run_property_suite(selector)))
