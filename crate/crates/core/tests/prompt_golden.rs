//! Golden-file checks for translation prompt rendering: output must match
//! the hand-substituted fixtures byte for byte.

use forge_core::lang::LanguageDescriptor;
use forge_core::translate::render_translation_prompt;

struct Fixture {
    code: &'static str,
    instruction: &'static str,
    long_name: &'static str,
    short_name: &'static str,
    golden: &'static str,
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        code: "print(1)",
        instruction: "Print 1.",
        long_name: "C++",
        short_name: "cpp",
        golden: include_str!("golden/prompt_cpp_print1.txt"),
    },
    Fixture {
        code: "s = \"{lg_long}\"\nprint(s)",
        instruction: "Echo the placeholder.",
        long_name: "Go",
        short_name: "go",
        golden: include_str!("golden/prompt_go_placeholder.txt"),
    },
    Fixture {
        code: "#!/usr/bin/env python\nfor i in range(3):\n    print(i)",
        instruction: "Count to three.\nOne per line.",
        long_name: "Bash",
        short_name: "bash",
        golden: include_str!("golden/prompt_bash_count.txt"),
    },
];

#[test]
fn rendered_prompts_match_golden_files_byte_exact() {
    for fixture in FIXTURES {
        let target = LanguageDescriptor::new(fixture.long_name, fixture.short_name);
        let rendered =
            render_translation_prompt(fixture.code, fixture.instruction, &target).unwrap();
        assert_eq!(
            rendered.as_bytes(),
            fixture.golden.as_bytes(),
            "prompt for {} diverges from golden file",
            fixture.short_name
        );
    }
}

#[test]
fn rendering_twice_is_byte_identical() {
    for fixture in FIXTURES {
        let target = LanguageDescriptor::new(fixture.long_name, fixture.short_name);
        let a = render_translation_prompt(fixture.code, fixture.instruction, &target).unwrap();
        let b = render_translation_prompt(fixture.code, fixture.instruction, &target).unwrap();
        assert_eq!(a, b);
    }
}
