//! Placeholder lib so the bench crate builds as a workspace member.
