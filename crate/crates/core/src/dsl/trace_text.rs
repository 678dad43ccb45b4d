//! `.trc` format, one event per line:
//!
//! ```text
//! model <model-id>                            # optional, before the first test
//! test <test-id> [spec=<tag>] [criticality=<1..5>]
//! enter <Class>.<selector> [site=<ordinal>]
//! exit
//! ```

use std::fmt::Write as _;

use super::{SourceSpan, TraceFormatError};
use crate::model::{Hierarchy, MethodRef, ProgramModel};
use crate::regression::{CallFrame, TestRecord, TraceStore};

/// Parses trace text without checking method names against a model.
pub fn parse_traces(text: &str) -> Result<TraceStore, TraceFormatError> {
    parse(text, None)
}

/// Parses trace text and resolves every entered method against `model`.
///
/// `enter C.s` names the receiver's class; the frame is recorded under the
/// class that actually implements `s` (found by walking up from `C`).
pub fn parse_traces_checked(
    text: &str,
    model: &ProgramModel,
) -> Result<TraceStore, TraceFormatError> {
    let hierarchy = model.hierarchy();
    parse(text, Some(&hierarchy))
}

fn fail<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, TraceFormatError> {
    Err(TraceFormatError {
        span: SourceSpan::at(line, column),
        message: message.into(),
    })
}

fn parse(text: &str, hierarchy: Option<&Hierarchy<'_>>) -> Result<TraceStore, TraceFormatError> {
    let mut store = TraceStore::default();
    let mut current: Option<TestRecord> = None;
    // Open frames of the current test, innermost last.
    let mut stack: Vec<CallFrame> = Vec::new();
    let mut last_line = 0;

    let finish = |record: TestRecord, store: &mut TraceStore| {
        store.records.insert(record.test_id.clone(), record);
    };

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        last_line = line_no;
        let line = raw.trim_end_matches('\r');
        let content = line.split('#').next().unwrap_or("");
        let indent = content.len() - content.trim_start().len();
        let mut words = content.split_whitespace();
        let Some(keyword) = words.next() else {
            continue;
        };
        let column = indent + 1;
        match keyword {
            "model" => {
                if current.is_some() || store.model_id.is_some() {
                    return fail(line_no, column, "`model` must appear once, before any test");
                }
                let Some(id) = words.next() else {
                    return fail(line_no, column, "`model` needs a model id");
                };
                store.model_id = Some(id.to_string());
            }
            "test" => {
                if !stack.is_empty() {
                    return fail(
                        line_no,
                        column,
                        "new test started while frames are still open",
                    );
                }
                if let Some(record) = current.take() {
                    finish(record, &mut store);
                }
                let Some(id) = words.next() else {
                    return fail(line_no, column, "`test` needs a test id");
                };
                if store.records.contains_key(id) {
                    return fail(line_no, column, format!("duplicate test id `{id}`"));
                }
                let mut record = TestRecord::new(id);
                for attr in words.by_ref() {
                    match attr.split_once('=') {
                        Some(("spec", tag)) if !tag.is_empty() => {
                            record.spec_tag = Some(tag.to_string())
                        }
                        Some(("criticality", value)) => {
                            record.criticality = match value.parse::<u8>() {
                                Ok(c) if (1..=5).contains(&c) => c,
                                _ => {
                                    return fail(
                                        line_no,
                                        column,
                                        format!("criticality must be 1..5, got `{value}`"),
                                    )
                                }
                            }
                        }
                        _ => {
                            return fail(
                                line_no,
                                column,
                                format!("unknown test attribute `{attr}`"),
                            )
                        }
                    }
                }
                current = Some(record);
            }
            "enter" => {
                if current.is_none() {
                    return fail(line_no, column, "`enter` before any `test`");
                }
                let Some(target) = words.next() else {
                    return fail(line_no, column, "`enter` needs Class.selector");
                };
                let Some((class, selector)) = target.split_once('.') else {
                    return fail(
                        line_no,
                        column,
                        format!("expected Class.selector, got `{target}`"),
                    );
                };
                if class.is_empty() || selector.is_empty() {
                    return fail(
                        line_no,
                        column,
                        format!("expected Class.selector, got `{target}`"),
                    );
                }
                let mut site = None;
                for attr in words.by_ref() {
                    match attr.split_once('=') {
                        Some(("site", value)) => match value.parse::<u32>() {
                            Ok(v) => site = Some(v),
                            Err(_) => {
                                return fail(line_no, column, format!("bad site ordinal `{value}`"))
                            }
                        },
                        _ => {
                            return fail(
                                line_no,
                                column,
                                format!("unknown enter attribute `{attr}`"),
                            )
                        }
                    }
                }
                let mut method = MethodRef::new(class, selector);
                if let Some(h) = hierarchy {
                    match h.lookup(class, selector) {
                        Some(owner) => method.class = owner.name.clone(),
                        None => {
                            return fail(
                                line_no,
                                column,
                                format!("enter of unknown method `{target}`"),
                            )
                        }
                    }
                    if let Some(ordinal) = site {
                        let Some(caller) = stack.last() else {
                            return fail(line_no, column, "site ordinal on a root activation");
                        };
                        let sites = h
                            .class(&caller.method.class)
                            .and_then(|c| c.method(&caller.method.selector))
                            .map_or(0, |m| m.call_sites.len());
                        if ordinal as usize >= sites {
                            return fail(
                                line_no,
                                column,
                                format!(
                                    "site {ordinal} out of range: {} has {sites} call sites",
                                    caller.method
                                ),
                            );
                        }
                    }
                }
                stack.push(CallFrame {
                    method,
                    site,
                    line: line_no,
                    children: Vec::new(),
                });
            }
            "exit" => {
                if words.next().is_some() {
                    return fail(line_no, column, "`exit` takes no arguments");
                }
                let Some(frame) = stack.pop() else {
                    return fail(line_no, column, "unbalanced `exit`: no open frame");
                };
                match stack.last_mut() {
                    Some(parent) => parent.children.push(frame),
                    None => current
                        .as_mut()
                        .expect("frames only exist inside a test")
                        .roots
                        .push(frame),
                }
            }
            other => return fail(line_no, column, format!("unknown trace event `{other}`")),
        }
    }

    if let Some(open) = stack.last() {
        return fail(
            last_line.max(1),
            1,
            format!(
                "unbalanced trace: {} entered on line {} never exits",
                open.method, open.line
            ),
        );
    }
    if let Some(record) = current.take() {
        finish(record, &mut store);
    }
    Ok(store)
}

/// Canonical `.trc` text; tests in id order, frames indented by depth.
pub fn serialize_traces(store: &TraceStore) -> String {
    let mut out = String::new();
    if let Some(id) = &store.model_id {
        let _ = writeln!(out, "model {id}");
    }
    for record in store.records.values() {
        out.push_str("test ");
        out.push_str(&record.test_id);
        if let Some(tag) = &record.spec_tag {
            let _ = write!(out, " spec={tag}");
        }
        let _ = writeln!(out, " criticality={}", record.criticality);
        fn emit(frame: &CallFrame, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            let _ = write!(out, "{pad}enter {}", frame.method);
            if let Some(site) = frame.site {
                let _ = write!(out, " site={site}");
            }
            out.push('\n');
            for child in &frame.children {
                emit(child, depth + 1, out);
            }
            let _ = writeln!(out, "{pad}exit");
        }
        for root in &record.roots {
            emit(root, 1, &mut out);
        }
    }
    out
}
