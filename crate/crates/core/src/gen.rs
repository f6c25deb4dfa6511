//! Seeded random EVL programs for property tests and the oracle suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::{parse_files, Program};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub max_handlers: usize,
    pub max_events: usize,
    /// Upper bound on statements across all functions, nested ones included.
    pub max_stmts: usize,
    pub max_globals: usize,
    pub loops: bool,
    pub helper: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_handlers: 3,
            max_events: 2,
            max_stmts: 20,
            max_globals: 3,
            loops: true,
            helper: true,
        }
    }
}

impl GenConfig {
    /// Programs small enough for exhaustive path enumeration.
    pub fn small() -> Self {
        GenConfig {
            max_handlers: 3,
            max_events: 2,
            max_stmts: 12,
            max_globals: 2,
            loops: true,
            helper: true,
        }
    }
}

struct Func {
    name: String,
    is_top: bool,
    body: Vec<String>,
    locals: Vec<String>,
    loops: usize,
}

struct Gen<'c> {
    rng: ChaCha8Rng,
    cfg: &'c GenConfig,
    globals: Vec<String>,
    handlers: Vec<String>,
    events: Vec<String>,
    helper: bool,
    budget: usize,
}

impl Gen<'_> {
    fn readable(&mut self, f: &Func) -> String {
        let pool: Vec<&String> = self.globals.iter().chain(&f.locals).collect();
        (*pool.choose(&mut self.rng).expect("at least one global")).clone()
    }

    fn expr(&mut self, f: &Func) -> String {
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..5).to_string(),
            1 => self.readable(f),
            2 => format!("{} + {}", self.readable(f), self.rng.gen_range(1..3)),
            _ => format!("{} + {}", self.readable(f), self.readable(f)),
        }
    }

    fn assign(&mut self, f: &Func) -> String {
        let target = self.readable(f);
        let e = self.expr(f);
        format!("{target} = {e};")
    }

    fn handler(&mut self) -> String {
        self.handlers.choose(&mut self.rng).expect("at least one handler").clone()
    }

    fn event(&mut self) -> String {
        self.events.choose(&mut self.rng).expect("at least one event").clone()
    }

    /// A statement without nested blocks.
    fn simple(&mut self, f: &Func) -> String {
        match self.rng.gen_range(0..10) {
            0..=2 => self.assign(f),
            3 | 4 => {
                let v = self.readable(f);
                format!("print({v});")
            }
            5 => {
                let (e, h) = (self.event(), self.handler());
                format!("register(\"{e}\", {h});")
            }
            6 | 7 => format!("emit(\"{}\");", self.event()),
            8 => format!("register_async({});", self.handler()),
            _ if self.helper => {
                let e = self.expr(f);
                format!("aux({e});")
            }
            _ => self.assign(f),
        }
    }

    fn stmt(&mut self, f: &mut Func) {
        let roll = self.rng.gen_range(0..12);
        if roll == 0 && !f.is_top {
            let name = format!("l{}", f.locals.len());
            let decl = if self.rng.gen_bool(0.5) {
                format!("var {name};")
            } else {
                let e = self.expr(f);
                format!("var {name} = {e};")
            };
            f.locals.push(name);
            f.body.push(decl);
            self.budget -= 1;
        } else if roll == 1 && self.budget >= 3 {
            let c = self.readable(f);
            let t = self.simple(f);
            let e = self.simple(f);
            f.body.push(format!("if ({c} > 1) {{ {t} }} else {{ {e} }}"));
            self.budget -= 3;
        } else if roll == 2 && self.cfg.loops && self.budget >= 4 {
            let i = format!("i{}{}", f.name, f.loops);
            f.loops += 1;
            let s = self.simple(f);
            f.body.push(format!("var {i} = 0;"));
            f.body.push(format!("while ({i} < 2) {{ {s} {i} = {i} + 1; }}"));
            self.budget -= 4;
        } else {
            let s = self.simple(f);
            f.body.push(s);
            self.budget -= 1;
        }
    }
}

/// Source text of the program generated from `seed`.
pub fn generate_source(seed: u64, cfg: &GenConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nh = rng.gen_range(1..=cfg.max_handlers.max(1));
    let ne = rng.gen_range(1..=cfg.max_events.max(1));
    let ng = rng.gen_range(1..=cfg.max_globals.max(1));
    let helper = cfg.helper && rng.gen_bool(0.3);
    let mut g = Gen {
        rng,
        cfg,
        globals: Vec::new(),
        handlers: (0..nh).map(|i| format!("h{i}")).collect(),
        events: (0..ne).map(|i| format!("e{i}")).collect(),
        helper,
        budget: cfg.max_stmts.saturating_sub(if helper { 2 } else { 0 }),
    };
    let mut top = Func {
        name: "top".into(),
        is_top: true,
        body: Vec::new(),
        locals: Vec::new(),
        loops: 0,
    };
    for i in 0..ng {
        let name = format!("g{i}");
        let decl = if g.rng.gen_bool(0.6) {
            format!("var {name};")
        } else {
            format!("var {name} = {};", g.rng.gen_range(0..3))
        };
        top.body.push(decl);
        g.globals.push(name);
        g.budget = g.budget.saturating_sub(1);
    }
    let mut funcs: Vec<Func> = std::iter::once(top)
        .chain(g.handlers.clone().into_iter().map(|name| Func {
            name,
            is_top: false,
            body: Vec::new(),
            locals: Vec::new(),
            loops: 0,
        }))
        .collect();
    while g.budget > 0 {
        let i = g.rng.gen_range(0..funcs.len());
        g.stmt(&mut funcs[i]);
    }
    let mut out = String::new();
    for s in &funcs[0].body {
        out.push_str(s);
        out.push('\n');
    }
    for f in &funcs[1..] {
        out.push_str(&format!("\nfunction {}() {{\n", f.name));
        for s in &f.body {
            out.push_str(&format!("    {s}\n"));
        }
        out.push_str("}\n");
    }
    if helper {
        let g0 = g.globals[0].clone();
        out.push_str(&format!("\nfunction aux(p) {{\n    {g0} = p;\n    print(p);\n}}\n"));
    }
    out
}

/// The program generated from `seed`, parsed as `gen_<seed>.evl`.
pub fn generate(seed: u64, cfg: &GenConfig) -> Program {
    let src = generate_source(seed, cfg);
    let name = format!("gen_{seed}.evl");
    parse_files(&[(name.as_str(), src.as_str())])
        .unwrap_or_else(|e| panic!("generated program {seed} does not parse: {e}\n{src}"))
}
