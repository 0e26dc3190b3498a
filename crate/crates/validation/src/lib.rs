//! Holds the `acceptance` test target, kept apart so it runs after every
//! other test in the workspace.
