use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Default cap on jet indices.
pub const DEFAULT_NMAX: usize = 32;

/// Built-in elementary functions with known derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Exp,
    Log,
    Sin,
    Cos,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "exp" => Some(Builtin::Exp),
            "log" => Some(Builtin::Log),
            "sin" => Some(Builtin::Sin),
            "cos" => Some(Builtin::Cos),
            _ => None,
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Builtin::Exp => v.exp(),
            Builtin::Log => v.ln(),
            Builtin::Sin => v.sin(),
            Builtin::Cos => v.cos(),
        }
    }
}

/// An opaque function symbol with optional derivative rules, one per argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSymbol {
    pub name: String,
    pub arity: usize,
    /// Parameter names used in declarations, such as `u` in `declare f(u)`.
    pub params: Vec<String>,
    /// `derivatives[i]` names the symbol equal to the partial derivative in argument `i`.
    pub derivatives: Vec<Option<String>>,
    pub builtin: Option<Builtin>,
}

impl FunctionSymbol {
    pub fn new(name: &str, params: &[&str]) -> FunctionSymbol {
        FunctionSymbol {
            name: name.to_string(),
            arity: params.len(),
            params: params.iter().map(|p| p.to_string()).collect(),
            derivatives: vec![None; params.len()],
            builtin: None,
        }
    }

    fn builtin(name: &str, b: Builtin) -> FunctionSymbol {
        let mut s = FunctionSymbol::new(name, &["v"]);
        s.builtin = Some(b);
        s
    }
}

/// Declared function symbols and unit constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    functions: BTreeMap<String, FunctionSymbol>,
    units: BTreeSet<String>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::new()
    }
}

const RESERVED: &[&str] = &["t", "x", "u", "Dx", "sqrt"];

impl SymbolTable {
    /// A table holding only the built-in functions.
    pub fn new() -> SymbolTable {
        let mut functions = BTreeMap::new();
        for (n, b) in [
            ("exp", Builtin::Exp),
            ("log", Builtin::Log),
            ("sin", Builtin::Sin),
            ("cos", Builtin::Cos),
        ] {
            functions.insert(n.to_string(), FunctionSymbol::builtin(n, b));
        }
        SymbolTable {
            functions,
            units: BTreeSet::new(),
        }
    }

    fn check_name(&self, name: &str) -> Result<()> {
        let jet = name.len() > 1
            && name.starts_with('u')
            && name[1..].chars().all(|c| c.is_ascii_digit());
        if RESERVED.contains(&name) || jet || Builtin::from_name(name).is_some() {
            return Err(Error::Problem(format!("`{name}` is a reserved name")));
        }
        Ok(())
    }

    /// Declares an opaque function; redeclaring with the same arity is a no-op.
    pub fn declare_function(&mut self, name: &str, params: &[&str]) -> Result<()> {
        self.check_name(name)?;
        if self.units.contains(name) {
            return Err(Error::Problem(format!("`{name}` is already a unit constant")));
        }
        if let Some(old) = self.functions.get(name) {
            if old.arity != params.len() {
                return Err(Error::Problem(format!(
                    "`{name}` redeclared with a different arity"
                )));
            }
            return Ok(());
        }
        if params.is_empty() {
            return Err(Error::Problem(format!("`{name}` needs at least one argument")));
        }
        self.functions
            .insert(name.to_string(), FunctionSymbol::new(name, params));
        Ok(())
    }

    /// Declares `d(name)/d(arg) = target`; the target is declared with the same
    /// parameters when it is new.
    pub fn add_rule(&mut self, name: &str, arg: usize, target: &str) -> Result<()> {
        let sym = self
            .functions
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?
            .clone();
        if sym.builtin.is_some() {
            return Err(Error::Problem(format!("cannot add rules to built-in `{name}`")));
        }
        if arg >= sym.arity {
            return Err(Error::Problem(format!("`{name}` has no argument {arg}")));
        }
        let params: Vec<&str> = sym.params.iter().map(String::as_str).collect();
        self.declare_function(target, &params)?;
        if self.functions[target].arity != sym.arity {
            return Err(Error::Problem(format!(
                "rule target `{target}` has a different arity from `{name}`"
            )));
        }
        self.functions.get_mut(name).unwrap().derivatives[arg] = Some(target.to_string());
        if self.has_bad_cycle() {
            self.functions.get_mut(name).unwrap().derivatives[arg] = None;
            return Err(Error::Problem(format!(
                "rule d({name}) = {target} creates a derivative cycle"
            )));
        }
        Ok(())
    }

    /// Derivative cycles are allowed only when they pass through a single symbol
    /// (such as `d(g)/d(u) = g`).
    fn has_bad_cycle(&self) -> bool {
        for start in self.functions.keys() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&str> = vec![start];
            while let Some(cur) = stack.pop() {
                for d in self.functions[cur].derivatives.iter().flatten() {
                    if d == start && cur != start.as_str() {
                        return true;
                    }
                    if d != cur && seen.insert(d.as_str()) {
                        stack.push(d);
                    }
                }
            }
        }
        false
    }

    pub fn declare_unit(&mut self, name: &str) -> Result<()> {
        self.check_name(name)?;
        if self.functions.contains_key(name) {
            return Err(Error::Problem(format!("`{name}` is already a function")));
        }
        self.units.insert(name.to_string());
        Ok(())
    }

    pub fn is_unit(&self, name: &str) -> bool {
        self.units.contains(name)
    }

    pub fn units(&self) -> impl Iterator<Item = &String> {
        self.units.iter()
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSymbol> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.functions.values()
    }

    /// Name of the symbol equal to `d name / d arg`.
    pub fn derivative(&self, name: &str, arg: usize) -> Result<&str> {
        let sym = self
            .functions
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        sym.derivatives
            .get(arg)
            .and_then(|d| d.as_deref())
            .ok_or_else(|| Error::MissingDerivativeRule {
                symbol: name.to_string(),
                arg,
            })
    }

    /// A unary symbol whose derivative is `name`, if one was declared.
    pub fn antiderivative(&self, name: &str) -> Option<&str> {
        self.functions
            .values()
            .find(|s| s.arity == 1 && s.derivatives[0].as_deref() == Some(name) && s.name != name)
            .map(|s| s.name.as_str())
    }
}

/// Symbol table plus the jet-index cap. Passed explicitly to every operation that
/// needs either.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Context {
    pub symbols: SymbolTable,
    pub nmax: usize,
}

impl Default for Context {
    fn default() -> Self {
        Context::new()
    }
}

impl Context {
    pub fn new() -> Context {
        Context {
            symbols: SymbolTable::new(),
            nmax: DEFAULT_NMAX,
        }
    }

    /// Like [`Context::new`] with `nmax` taken from `CONSERVKIT_NMAX` when set.
    pub fn from_env() -> Result<Context> {
        let mut ctx = Context::new();
        if let Ok(v) = std::env::var("CONSERVKIT_NMAX") {
            ctx.nmax = v
                .trim()
                .parse()
                .map_err(|_| Error::Problem(format!("CONSERVKIT_NMAX is not an integer: {v}")))?;
        }
        Ok(ctx)
    }

    pub fn with_nmax(mut self, nmax: usize) -> Context {
        self.nmax = nmax;
        self
    }

    /// Context with the chain `fc' = fh`, `fh' = f`, `f' = fp`, `fp' = fpp`, `fpp' = fppp`
    /// used by KdV-type examples.
    pub fn kdv_type() -> Context {
        let mut ctx = Context::new();
        let s = &mut ctx.symbols;
        s.declare_function("f", &["u"]).unwrap();
        s.declare_function("fh", &["u"]).unwrap();
        s.declare_function("fc", &["u"]).unwrap();
        s.add_rule("fc", 0, "fh").unwrap();
        s.add_rule("fh", 0, "f").unwrap();
        s.add_rule("f", 0, "fp").unwrap();
        s.add_rule("fp", 0, "fpp").unwrap();
        s.add_rule("fpp", 0, "fppp").unwrap();
        ctx
    }

    pub fn check_jet(&self, j: usize) -> Result<()> {
        if j > self.nmax {
            Err(Error::JetOverflow {
                index: j,
                max: self.nmax,
            })
        } else {
            Ok(())
        }
    }
}
