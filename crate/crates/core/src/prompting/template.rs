//! `{name}` placeholder substitution and the quoting rule for inserted posts.

use crate::error::{Error, Result};

/// Replaces every `{name}` with its value in one left-to-right pass; values are
/// never rescanned. `{{` and `}}` produce literal braces. Unknown or unclosed
/// placeholders are errors.
pub fn render_template(template: &str, vars: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(pos) = rest.find(['{', '}']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with("{{") {
            out.push('{');
            rest = &tail[2..];
        } else if tail.starts_with("}}") {
            out.push('}');
            rest = &tail[2..];
        } else if tail.starts_with('}') {
            return Err(Error::InvalidArgument("unmatched `}` in template".into()));
        } else {
            let end = tail
                .find('}')
                .ok_or_else(|| Error::InvalidArgument("unclosed placeholder in template".into()))?;
            let name = &tail[1..end];
            let value = vars
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::InvalidArgument(format!("no value for placeholder `{name}`")))?;
            out.push_str(value);
            rest = &tail[end + 1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Wraps a post in double quotes, escaping `\`, `"`, newline and carriage return.
pub fn quote_post(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Quoted posts joined by `", "`.
pub fn format_post_list<S: AsRef<str>>(posts: &[S]) -> String {
    posts
        .iter()
        .map(|p| quote_post(p.as_ref()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Inverse of [`format_post_list`].
pub fn parse_post_list(list: &str) -> Option<Vec<String>> {
    let mut out = Vec::new();
    let mut chars = list.chars().peekable();
    if chars.peek().is_none() {
        return Some(out);
    }
    loop {
        if chars.next()? != '"' {
            return None;
        }
        let mut item = String::new();
        loop {
            match chars.next()? {
                '"' => break,
                '\\' => match chars.next()? {
                    '\\' => item.push('\\'),
                    '"' => item.push('"'),
                    'n' => item.push('\n'),
                    'r' => item.push('\r'),
                    _ => return None,
                },
                c => item.push(c),
            }
        }
        out.push(item);
        match chars.next() {
            None => return Some(out),
            Some(',') if chars.next() == Some(' ') => {}
            _ => return None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn substitution_is_single_pass() {
        let out = render_template("a={a} b={b} {{lit}}", &[("a", "{b}"), ("b", "2")]).unwrap();
        assert_eq!(out, "a={b} b=2 {lit}");
    }

    #[test]
    fn bad_templates() {
        assert!(render_template("{missing}", &[]).is_err());
        assert!(render_template("{open", &[]).is_err());
        assert!(render_template("close}", &[]).is_err());
    }

    #[test]
    fn quoting_examples() {
        assert_eq!(format_post_list(&["a", "b\"c"]), r#""a", "b\"c""#);
        assert_eq!(format_post_list(&["x\ny"]), r#""x\ny""#);
        assert_eq!(parse_post_list(r#""a", "b""#).unwrap(), vec!["a", "b"]);
        assert_eq!(parse_post_list("\"a\",\"b\""), None);
    }

    proptest! {
        #[test]
        fn post_list_round_trips(posts in proptest::collection::vec(".*", 0..6)) {
            prop_assert_eq!(parse_post_list(&format_post_list(&posts)).unwrap(), posts);
        }

        #[test]
        fn quoted_posts_have_no_raw_newlines(s in ".*") {
            prop_assert!(!quote_post(&s).contains('\n'));
        }
    }
}
