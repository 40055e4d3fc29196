//! Holds the `acceptance` test target, which checks conservkit against its
//! acceptance criteria and prints one PASS/FAIL line per criterion.
