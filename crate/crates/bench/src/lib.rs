// benchmark-only package; see benches/
