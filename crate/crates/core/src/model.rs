//! Language-neutral program model.
//!
//! A [`ProgramModel`] stands in for the source of one program version: classes
//! with single inheritance, instance variables, and methods whose bodies are
//! reduced to call sites and variable accesses. Everything downstream (the
//! class message diagram, change identification, strategies) is computed from
//! this structure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

/// Selector reserved for constructors.
pub const CONSTRUCTOR: &str = "<init>";

/// One version of a program.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgramModel {
    /// Identifies the program version; assigned by whoever loads the model.
    pub model_id: String,
    pub classes: Vec<ClassDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub superclass: Option<String>,
    pub is_abstract: bool,
    pub instance_vars: Vec<VarDecl>,
    pub methods: Vec<MethodDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub declared_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDef {
    pub selector: String,
    pub is_constructor: bool,
    /// Opaque hash of the method body supplied by the model author.
    pub body_fingerprint: Option<String>,
    pub call_sites: Vec<CallSite>,
    pub var_uses: BTreeSet<VarRef>,
    pub var_defs: BTreeSet<VarRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallSite {
    /// Position of the site within its method, counted from zero in source order.
    pub ordinal: u32,
    pub dispatch: Dispatch,
    pub target_selector: String,
}

/// How the receiver of a message is determined.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dispatch {
    SelfSend,
    Super,
    /// Receiver statically typed as the named class or any of its subclasses.
    Typed(String),
    /// Receiver may be an instance of any class.
    Untyped,
}

/// Reference to an instance variable. `owner_class` is where lookup starts;
/// the declaring class is found by walking up the superclass chain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    pub owner_class: String,
    pub var_name: String,
}

impl VarRef {
    pub fn new(owner_class: impl Into<String>, var_name: impl Into<String>) -> Self {
        Self {
            owner_class: owner_class.into(),
            var_name: var_name.into(),
        }
    }
}

/// A method named by its implementing class and selector, printed `Class.selector`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub class: String,
    pub selector: String,
}

impl MethodRef {
    pub fn new(class: impl Into<String>, selector: impl Into<String>) -> Self {
        Self {
            class: class.into(),
            selector: selector.into(),
        }
    }

    pub fn is_constructor(&self) -> bool {
        self.selector == CONSTRUCTOR
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.selector)
    }
}

/// Identity of a call site: `(class, selector, ordinal)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId {
    pub class: String,
    pub selector: String,
    pub ordinal: u32,
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}#{}", self.class, self.selector, self.ordinal)
    }
}

impl ClassDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            superclass: None,
            is_abstract: false,
            instance_vars: Vec::new(),
            methods: Vec::new(),
        }
    }

    pub fn method(&self, selector: &str) -> Option<&MethodDef> {
        self.methods.iter().find(|m| m.selector == selector)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.instance_vars.iter().find(|v| v.name == name)
    }

    pub fn has_constructor(&self) -> bool {
        self.methods.iter().any(|m| m.is_constructor)
    }
}

impl MethodDef {
    pub fn new(selector: impl Into<String>) -> Self {
        Self {
            selector: selector.into(),
            is_constructor: false,
            body_fingerprint: None,
            call_sites: Vec::new(),
            var_uses: BTreeSet::new(),
            var_defs: BTreeSet::new(),
        }
    }

    /// Appends a call site with the next ordinal.
    pub fn push_call(&mut self, dispatch: Dispatch, target: impl Into<String>) {
        let ordinal = self.call_sites.len() as u32;
        self.call_sites.push(CallSite {
            ordinal,
            dispatch,
            target_selector: target.into(),
        });
    }
}

impl ProgramModel {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            classes: Vec::new(),
        }
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn method_count(&self) -> usize {
        self.classes.iter().map(|c| c.methods.len()).sum()
    }

    pub fn hierarchy(&self) -> Hierarchy<'_> {
        Hierarchy::new(self)
    }
}

/// Name-indexed view of a model answering inheritance and lookup questions.
///
/// Superclass walks stop at the first repeated class, so a `Hierarchy` is safe
/// to use on models that have not been validated yet.
pub struct Hierarchy<'a> {
    classes: BTreeMap<&'a str, &'a ClassDef>,
    children: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> Hierarchy<'a> {
    pub fn new(model: &'a ProgramModel) -> Self {
        let mut classes = BTreeMap::new();
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for class in &model.classes {
            classes.entry(class.name.as_str()).or_insert(class);
        }
        for class in &model.classes {
            if let Some(sup) = &class.superclass {
                children
                    .entry(sup.as_str())
                    .or_default()
                    .push(class.name.as_str());
            }
        }
        Self { classes, children }
    }

    pub fn class(&self, name: &str) -> Option<&'a ClassDef> {
        self.classes.get(name).copied()
    }

    /// The class itself followed by its ancestors, nearest first.
    pub fn chain(&self, name: &str) -> Vec<&'a ClassDef> {
        let mut out: Vec<&'a ClassDef> = Vec::new();
        let mut current = self.class(name);
        while let Some(class) = current {
            if out.iter().any(|c| c.name == class.name) {
                break;
            }
            out.push(class);
            current = class.superclass.as_deref().and_then(|s| self.class(s));
        }
        out
    }

    /// First implementation of `selector` at or above `class`.
    pub fn lookup(&self, class: &str, selector: &str) -> Option<&'a ClassDef> {
        self.chain(class)
            .into_iter()
            .find(|c| c.method(selector).is_some())
    }

    /// First implementation of `selector` strictly above `class`.
    pub fn lookup_above(&self, class: &str, selector: &str) -> Option<&'a ClassDef> {
        self.chain(class)
            .into_iter()
            .skip(1)
            .find(|c| c.method(selector).is_some())
    }

    /// Class declaring the instance variable reached from `owner` upward.
    pub fn resolve_var(&self, var: &VarRef) -> Option<&'a ClassDef> {
        self.chain(&var.owner_class)
            .into_iter()
            .find(|c| c.var(&var.var_name).is_some())
    }

    /// All transitive subclasses of `class`, in breadth-first order.
    pub fn descendants(&self, class: &str) -> Vec<&'a ClassDef> {
        let mut out: Vec<&'a ClassDef> = Vec::new();
        let mut queue: VecDeque<&str> = VecDeque::from([class]);
        let mut seen: BTreeSet<&str> = BTreeSet::from([class]);
        while let Some(next) = queue.pop_front() {
            for child in self.children.get(next).into_iter().flatten() {
                if seen.insert(child) {
                    if let Some(c) = self.class(child) {
                        out.push(c);
                    }
                    queue.push_back(child);
                }
            }
        }
        out
    }

    pub fn is_ancestor(&self, ancestor: &str, class: &str) -> bool {
        self.chain(class).iter().skip(1).any(|c| c.name == ancestor)
    }

    /// Classes that declare `selector` anywhere in the model.
    pub fn implementors(&self, selector: &str) -> Vec<&'a ClassDef> {
        self.classes
            .values()
            .copied()
            .filter(|c| c.method(selector).is_some())
            .collect()
    }

    fn in_cycle(&self, name: &str) -> bool {
        let mut current = self.class(name).and_then(|c| c.superclass.as_deref());
        let mut steps = 0;
        while let Some(sup) = current {
            if sup == name {
                return true;
            }
            steps += 1;
            if steps > self.classes.len() {
                return false;
            }
            current = self.class(sup).and_then(|c| c.superclass.as_deref());
        }
        false
    }
}

/// Machine-readable classification of a model defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationCode {
    DuplicateClass,
    UnknownSuperclass,
    InheritanceCycle,
    DuplicateMethod,
    DuplicateVar,
    UnknownType,
    ConstructorName,
    SiteOrdinal,
    UnknownReceiverClass,
    UnresolvedSelector,
    IllegalSuper,
    UnresolvedVar,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DuplicateClass => "DUPLICATE_CLASS",
            Self::UnknownSuperclass => "UNKNOWN_SUPERCLASS",
            Self::InheritanceCycle => "INHERITANCE_CYCLE",
            Self::DuplicateMethod => "DUPLICATE_METHOD",
            Self::DuplicateVar => "DUPLICATE_VAR",
            Self::UnknownType => "UNKNOWN_TYPE",
            Self::ConstructorName => "CONSTRUCTOR_NAME",
            Self::SiteOrdinal => "SITE_ORDINAL",
            Self::UnknownReceiverClass => "UNKNOWN_RECEIVER_CLASS",
            Self::UnresolvedSelector => "UNRESOLVED_SELECTOR",
            Self::IllegalSuper => "ILLEGAL_SUPER",
            Self::UnresolvedVar => "UNRESOLVED_VAR",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// Result of [`validate`]; empty means the model is well formed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: String) {
        self.violations.push(Violation { code, message });
    }
}

/// Reports every invariant violation of `model`.
pub fn validate(model: &ProgramModel) -> ValidationReport {
    use ViolationCode::*;

    let mut report = ValidationReport::default();
    let hierarchy = model.hierarchy();

    let mut seen = BTreeSet::new();
    for class in &model.classes {
        if !seen.insert(class.name.as_str()) {
            report.push(
                DuplicateClass,
                format!("class {} declared twice", class.name),
            );
        }
    }

    let mut cycle_reported = BTreeSet::new();
    for class in &model.classes {
        if let Some(sup) = &class.superclass {
            if hierarchy.class(sup).is_none() {
                report.push(
                    UnknownSuperclass,
                    format!("class {} extends unknown class {sup}", class.name),
                );
            } else if hierarchy.in_cycle(&class.name) && cycle_reported.insert(class.name.clone()) {
                report.push(
                    InheritanceCycle,
                    format!("class {} is its own ancestor", class.name),
                );
            }
        }
    }

    for class in &model.classes {
        let mut selectors = BTreeSet::new();
        for method in &class.methods {
            if !selectors.insert(method.selector.as_str()) {
                report.push(
                    DuplicateMethod,
                    format!("{}.{} declared twice", class.name, method.selector),
                );
            }
        }
        let mut vars = BTreeSet::new();
        for var in &class.instance_vars {
            if !vars.insert(var.name.as_str()) {
                report.push(
                    DuplicateVar,
                    format!("{}.{} declared twice", class.name, var.name),
                );
            }
            if let Some(ty) = &var.declared_type {
                if hierarchy.class(ty).is_none() {
                    report.push(
                        UnknownType,
                        format!("{}.{} has unknown type {ty}", class.name, var.name),
                    );
                }
            }
        }

        for method in &class.methods {
            validate_method(&hierarchy, class, method, &mut report);
        }
    }

    report
}

fn validate_method(
    hierarchy: &Hierarchy<'_>,
    class: &ClassDef,
    method: &MethodDef,
    report: &mut ValidationReport,
) {
    use ViolationCode::*;
    let here = format!("{}.{}", class.name, method.selector);

    if method.is_constructor != (method.selector == CONSTRUCTOR) {
        report.push(
            ConstructorName,
            format!("{here}: constructors must be named {CONSTRUCTOR} and only constructors may use that name"),
        );
    }

    for (index, site) in method.call_sites.iter().enumerate() {
        if site.ordinal as usize != index {
            report.push(
                SiteOrdinal,
                format!("{here}: call site {index} carries ordinal {}", site.ordinal),
            );
        }
        let target = &site.target_selector;
        match &site.dispatch {
            Dispatch::SelfSend => {
                if hierarchy.lookup(&class.name, target).is_none() {
                    report.push(
                        UnresolvedSelector,
                        format!(
                            "{here}#{}: self {target} has no implementation",
                            site.ordinal
                        ),
                    );
                }
            }
            Dispatch::Super => {
                if hierarchy.lookup_above(&class.name, target).is_none() {
                    report.push(
                        IllegalSuper,
                        format!(
                            "{here}#{}: no superclass of {} implements {target}",
                            site.ordinal, class.name
                        ),
                    );
                }
            }
            Dispatch::Typed(receiver) => {
                if hierarchy.class(receiver).is_none() {
                    report.push(
                        UnknownReceiverClass,
                        format!("{here}#{}: unknown receiver class {receiver}", site.ordinal),
                    );
                } else if hierarchy.lookup(receiver, target).is_none() {
                    report.push(
                        UnresolvedSelector,
                        format!(
                            "{here}#{}: {receiver} neither implements nor inherits {target}",
                            site.ordinal
                        ),
                    );
                }
            }
            Dispatch::Untyped => {
                if hierarchy.implementors(target).is_empty() {
                    report.push(
                        UnresolvedSelector,
                        format!("{here}#{}: no class implements {target}", site.ordinal),
                    );
                }
            }
        }
    }

    for var in method.var_uses.iter().chain(&method.var_defs) {
        let reachable =
            var.owner_class == class.name || hierarchy.is_ancestor(&var.owner_class, &class.name);
        if !reachable || hierarchy.resolve_var(var).is_none() {
            report.push(
                UnresolvedVar,
                format!(
                    "{here}: variable {}.{} is not declared in {} or its ancestors",
                    var.owner_class, var.var_name, class.name
                ),
            );
        }
    }
}

/// Gives every class without a constructor a synthesized `<init>` that defines
/// exactly the instance variables declared in that class.
pub fn synthesize_default_constructors(model: &ProgramModel) -> ProgramModel {
    let mut out = model.clone();
    for class in &mut out.classes {
        if class.has_constructor() {
            continue;
        }
        let mut ctor = MethodDef::new(CONSTRUCTOR);
        ctor.is_constructor = true;
        ctor.var_defs = class
            .instance_vars
            .iter()
            .map(|v| VarRef::new(class.name.clone(), v.name.clone()))
            .collect();
        class.methods.insert(0, ctor);
    }
    out
}
