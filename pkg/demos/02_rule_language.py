"""A tour of the rule language: parsing, evaluation, canonical printing.

Rules are '.'-terminated clauses over one implicit subject, with quoted or
bare constants, numeric variable bindings, `=<` comparisons (optionally
negated), negation as failure, and `ab`-prefixed exception predicates.
"""

from p2c import canonicalize, mentioned_values, parse_rule_program, program_decides
from p2c.rules import rule_fires

TEXT = """
% favourable credit risk
label(X,'good') :- checking_account_status(X,'no_checking_account').
label(X,'good') :- not checking_account_status(X,'no_checking_account'),
                   duration_months(X,N1), N1=<21.0,
                   credit_amount(X,N2), not(N2=<428.0),
                   not ab1(X,'True').
ab1(X,'True') :- property(X,'car or other'), credit_amount(X,N2), N2=<1345.0.
"""

program = parse_rule_program(TEXT, kind="decision")
print(f"{len(program.rules)} main rule(s), {len(program.aux_rules)} exception rule(s)")

profile = {
    "checking_account_status": "lt_0",
    "duration_months": 18.0,
    "credit_amount": 2000.0,
    "property": "real_estate",
}
print("profile:", profile)
print("some rule fires:", program_decides(program, profile))
for i, rule in enumerate(program.rules):
    print(f"  rule {i} fires:", rule_fires(rule, profile, program))

# drop the credit amount under the exception threshold and watch ab1 block rule 1
cheap = dict(profile, property="car or other", credit_amount=900.0)
print("with a small 'car or other' loan:", program_decides(program, cheap))

# every constant or bound the program applies to one feature
print("values mentioned for credit_amount:", mentioned_values(program, "credit_amount"))

# the canonical form is stable: parse . print is a fixpoint
once = canonicalize(TEXT)
print("canonical form:")
print(once)
assert canonicalize(once) == once
