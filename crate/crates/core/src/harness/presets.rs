//! Named configurations for the standard runs.

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2a",
        description: "Re/Im χ and v_g against Δ1 for growing interaction shifts",
        config: "scenario = susceptibility-sweep\n\
                 [spectrum]\n\
                 delta1_min = -6 gamma\n\
                 delta1_max = 6 gamma\n\
                 delta1_points = 481\n\
                 delta_r_values = 0, -0.5, -1, -2, -5 gamma\n",
    },
    Preset {
        name: "fig2b",
        description: "steady v_g against Δ_R for several EIT detunings",
        config: "scenario = custom-sweep\n\
                 [blockade]\n\
                 delta_r_start = 0 gamma\n\
                 delta_r_end = -50 gamma\n\
                 points = 501\n\
                 [sweep]\n\
                 axis = eit_detuning\n\
                 values = 0.3, 0.5, 1, 2 gamma\n\
                 base = blockade-sweep\n",
    },
    Preset {
        name: "fig3-a058",
        description: "counter-propagation, a = 0.58σ",
        config: "scenario = propagate-counter\n[interaction]\na = 0.58 sigma\n",
    },
    Preset {
        name: "fig3-a1",
        description: "counter-propagation, a = σ",
        config: "scenario = propagate-counter\n[interaction]\na = 1 sigma\n",
    },
    Preset {
        name: "fig3-a15",
        description: "counter-propagation, a = 1.5σ",
        config: "scenario = propagate-counter\n[interaction]\na = 1.5 sigma\n",
    },
    Preset {
        name: "fig3",
        description: "counter-propagation for a = 0.58σ, σ, 1.5σ",
        config: "scenario = custom-sweep\n\
                 [sweep]\n\
                 axis = a\n\
                 values = 0.58, 1, 1.5 sigma\n\
                 base = propagate-counter\n",
    },
    Preset {
        name: "fig4a",
        description: "counter-propagating F and φ against medium length, a = 1.5σ",
        config: "scenario = xpm\n\
                 [interaction]\n\
                 a = 1.5 sigma\n\
                 [xpm]\n\
                 geometry = counter\n\
                 lengths = 1, 2, 3, 4, 5, 6, 7, 8 sigma\n",
    },
    Preset {
        name: "fig4a-slow",
        description: "counter pass against one at 10⁻³ of the group velocity",
        config: "scenario = slow-pass\n\
                 [interaction]\n\
                 a = 1.5 sigma\n\
                 [xpm]\n\
                 vg_scale = 1e-3\n\
                 slow_mode = resimulate\n",
    },
    Preset {
        name: "fig4b",
        description: "co-propagating F and φ against medium length, a = 1.5σ",
        config: "scenario = xpm\n\
                 [interaction]\n\
                 a = 1.5 sigma\n\
                 [xpm]\n\
                 geometry = co\n\
                 lengths = 1, 2, 3, 4, 5 sigma\n",
    },
    Preset {
        name: "fig4b-propagate",
        description: "co-propagation trajectory over 5σ, a = 1.5σ",
        config: "scenario = propagate-co\n\
                 [interaction]\n\
                 a = 1.5 sigma\n\
                 [propagation]\n\
                 length = 5 sigma\n",
    },
    Preset {
        name: "c6x9",
        description: "counter pass with C6 and 9·C6, feedback off",
        config: "scenario = custom-sweep\n\
                 [propagation]\n\
                 feedback = disabled\n\
                 [xpm]\n\
                 lengths = 8 sigma\n\
                 [sweep]\n\
                 axis = c6_scale\n\
                 values = 1, 9\n\
                 base = xpm\n",
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
