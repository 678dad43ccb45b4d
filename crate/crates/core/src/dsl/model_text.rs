use super::lexer::{tokenize, Tok, Token, KEYWORDS};
use super::ParseError;
use crate::model::{ClassDef, Dispatch, MethodDef, ProgramModel, VarDecl, VarRef};

/// Parses `.mdl` text. Call-site ordinals are assigned in source order per
/// method. Name resolution is left to [`crate::model::validate`].
pub fn parse_model(text: &str) -> Result<ProgramModel, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut model = ProgramModel::default();
    while !parser.at(&Tok::Eof) {
        model.classes.push(parser.class()?);
    }
    Ok(model)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let token = self.peek();
        Err(ParseError {
            span: token.span.clone(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: token.tok.describe(),
        })
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if self.at(&tok) {
            self.advance();
            Ok(())
        } else {
            self.error(&[name])
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn class(&mut self) -> Result<ClassDef, ParseError> {
        self.keyword("class")?;
        let mut class = ClassDef::new(self.ident()?);
        if self.eat_keyword("extends") {
            class.superclass = Some(self.ident()?);
        }
        if self.eat_keyword("abstract") {
            class.is_abstract = true;
        }
        self.expect(Tok::LBrace, "`{`")?;
        loop {
            if self.at(&Tok::RBrace) {
                self.advance();
                break;
            }
            if self.eat_keyword("var") {
                let name = self.ident()?;
                let declared_type = if self.at(&Tok::Colon) {
                    self.advance();
                    Some(self.ident()?)
                } else {
                    None
                };
                class.instance_vars.push(VarDecl {
                    name,
                    declared_type,
                });
            } else if self.at_keyword("ctor") || self.at_keyword("method") {
                let method = self.method(&class.name)?;
                class.methods.push(method);
            } else {
                return self.error(&["`var`", "`method`", "`ctor`", "`}`"]);
            }
        }
        Ok(class)
    }

    fn method(&mut self, class: &str) -> Result<MethodDef, ParseError> {
        let is_constructor = self.eat_keyword("ctor");
        self.keyword("method")?;
        let mut method = MethodDef::new(self.ident()?);
        method.is_constructor = is_constructor;
        if self.eat_keyword("body") {
            match &self.peek().tok {
                Tok::Str(s) => {
                    method.body_fingerprint = Some(s.clone());
                    self.advance();
                }
                _ => return self.error(&["string"]),
            }
        }
        self.expect(Tok::LBrace, "`{`")?;
        loop {
            if self.at(&Tok::RBrace) {
                self.advance();
                break;
            }
            if self.eat_keyword("call") {
                let dispatch = match &self.peek().tok {
                    Tok::Ident(s) if s == "self" => Dispatch::SelfSend,
                    Tok::Ident(s) if s == "super" => Dispatch::Super,
                    Tok::Question => Dispatch::Untyped,
                    Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Dispatch::Typed(s.clone()),
                    _ => return self.error(&["`self`", "`super`", "`?`", "class name"]),
                };
                self.advance();
                self.expect(Tok::Dot, "`.`")?;
                let target = self.ident()?;
                method.push_call(dispatch, target);
            } else if self.eat_keyword("uses") {
                let var = self.varref(class)?;
                method.var_uses.insert(var);
            } else if self.eat_keyword("defs") {
                let var = self.varref(class)?;
                method.var_defs.insert(var);
            } else {
                return self.error(&["`call`", "`uses`", "`defs`", "`}`"]);
            }
        }
        Ok(method)
    }

    fn varref(&mut self, class: &str) -> Result<VarRef, ParseError> {
        let first = self.ident()?;
        if self.at(&Tok::Dot) {
            self.advance();
            let name = self.ident()?;
            Ok(VarRef::new(first, name))
        } else {
            Ok(VarRef::new(class, first))
        }
    }
}

/// Canonical text for `model`: model order for classes and members, one
/// statement per line, LF line endings.
pub fn serialize_model(model: &ProgramModel) -> String {
    let mut out = String::new();
    for class in &model.classes {
        out.push_str("class ");
        out.push_str(&class.name);
        if let Some(sup) = &class.superclass {
            out.push_str(" extends ");
            out.push_str(sup);
        }
        if class.is_abstract {
            out.push_str(" abstract");
        }
        out.push_str(" {\n");
        for var in &class.instance_vars {
            out.push_str("    var ");
            out.push_str(&var.name);
            if let Some(ty) = &var.declared_type {
                out.push_str(" : ");
                out.push_str(ty);
            }
            out.push('\n');
        }
        for method in &class.methods {
            out.push_str("    ");
            if method.is_constructor {
                out.push_str("ctor ");
            }
            out.push_str("method ");
            out.push_str(&method.selector);
            if let Some(body) = &method.body_fingerprint {
                out.push_str(" body ");
                push_string(&mut out, body);
            }
            out.push_str(" {\n");
            for site in &method.call_sites {
                let receiver = match &site.dispatch {
                    Dispatch::SelfSend => "self",
                    Dispatch::Super => "super",
                    Dispatch::Typed(c) => c.as_str(),
                    Dispatch::Untyped => "?",
                };
                out.push_str(&format!(
                    "        call {receiver}.{}\n",
                    site.target_selector
                ));
            }
            for var in &method.var_uses {
                out.push_str(&format!("        uses {}\n", varref_text(&class.name, var)));
            }
            for var in &method.var_defs {
                out.push_str(&format!("        defs {}\n", varref_text(&class.name, var)));
            }
            out.push_str("    }\n");
        }
        out.push_str("}\n");
    }
    out
}

fn varref_text(class: &str, var: &VarRef) -> String {
    if var.owner_class == class {
        var.var_name.clone()
    } else {
        format!("{}.{}", var.owner_class, var.var_name)
    }
}

fn push_string(out: &mut String, value: &str) {
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}
