#!/usr/bin/env python3
"""Regenerate testdata/mini_corpus deterministically.

The mini corpus is small enough to run the full pipeline in seconds but
is constructed so that every cleaning rule, every filter and the
deduplicator drop at least one document each.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "testdata" / "mini_corpus"
rng = random.Random(20260810)

SUBJECTS = ["研究人员", "工程师", "记者", "学生", "教师", "医生", "作家", "农民", "运动员", "科学家"]
PLACES = ["北京", "上海", "广州", "深圳", "杭州", "成都", "西安", "南京", "武汉", "重庆"]
TOPICS = ["人工智能", "气候变化", "城市交通", "公共卫生", "传统文化", "经济发展", "航天工程", "粮食安全", "教育改革", "能源技术"]
VERBS = ["指出", "认为", "发现", "表示", "强调", "介绍", "提出", "解释", "宣布", "证实"]
RESULTS = [
    "这一成果为后续研究奠定了基础",
    "相关工作已经发表在学术期刊上",
    "这项技术有望在未来几年投入使用",
    "有关部门将继续跟踪项目进展",
    "专家建议公众保持理性看待",
    "该项目得到了社会各界的广泛支持",
    "实验数据表明方法是可行的",
    "下一阶段的目标是扩大试点范围",
]
DETAILS = [
    "经过多年的努力，团队攻克了一系列技术难题",
    "在过去的十年里，这个领域发生了深刻的变化",
    "来自不同机构的学者参与了这项合作",
    "调查覆盖了全国二十多个城市的上万名受访者",
    "新的方法在效率上比传统方案提高了三成",
    "项目组在实地考察的基础上完成了报告",
    "会议讨论了行业面临的机遇与挑战",
    "多位专家在论坛上分享了各自的观点",
]


def sentence():
    return (
        f"{rng.choice(PLACES)}的{rng.choice(SUBJECTS)}{rng.choice(VERBS)}，"
        f"{rng.choice(TOPICS)}领域{rng.choice(DETAILS)}，{rng.choice(RESULTS)}。"
    )


def article(min_chars=170, paragraphs=2):
    paras = []
    for _ in range(paragraphs):
        text = ""
        while len(text) < min_chars // paragraphs:
            text += sentence()
        paras.append(text)
    return "\n".join(paras)


def gibberish(n):
    return "".join(chr(rng.randrange(0x4E00, 0x9FA0)) for _ in range(n))


def jline(obj):
    return json.dumps(obj, ensure_ascii=False)


def write(path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(lines)} lines)")


# ---------------------------------------------------------------- common crawl
cc = []
for _ in range(15):
    cc.append(jline({"text": article(), "url": f"http://example.com/{rng.randrange(10**6)}"}))

# clean-stage victims
cc.append(jline({"text": "这篇文章太短了。"}))  # min_chars
cc.append(jline({"text": "This page is almost entirely English text with too few Chinese characters to keep. " * 3}))
cc.append(jline({"text": "今日热点新闻汇总", "title": "今日热点新闻汇总"}))  # title_only
cc.append(jline({"text": "全场促销活动开始了，领取优惠券还能享受返利，点击进入马上抢。" + article()}))  # ads
cc.append(jline({"text": "首页 | 新闻 | 体育 | 财经\n导航 / 栏目 / 专题\n" + sentence()[:100]}))  # nav strip then too short
# survivors exercising transforms
cc.append(jline({"text": article() + "​" + "真的太好了！！！！！！"}))  # control char + punct run
trad = "漢語的傳統寫法與簡體寫法之間存在對應關係，國家推廣簡化字以後，兩種寫法長期並存。學者們對漢字的歷史演變進行了系統的研究，出版了多部專著。這些研究為理解中文書寫系統的發展提供了寶貴的資料，也為語言教學和機器處理奠定了基礎。近年來，數字化工具讓更多讀者能夠方便地閱讀古代文獻，傳統文化得到了更廣泛的傳播。"
cc.append(jline({"text": trad}))  # t2s transform
dup_para = article(min_chars=120, paragraphs=1)
cc.append(jline({"text": dup_para + "\n" + dup_para + "\n" + article(min_chars=100, paragraphs=1)}))  # dedup paragraphs

# filter-stage victims
cc.append(jline({"text": "有关部门打击赌博和博彩网站，同时查处诈骗与洗钱案件。" + article()}))  # 4 distinct sensitive words
SPAM_PHRASES = [
    "超值低价最后一天",
    "数量有限先到先得",
    "错过今天再等一年",
    "添加客服微信号领取红包",
    "全场两折起统统清仓",
    "零首付零利息轻松拥有",
    "扫码关注立刻到账",
    "爆款直降快来下单吧",
]
def spam_doc():
    body = ""
    while len(body) < 170:
        body += rng.choice(SPAM_PHRASES) + "，"
    return body + "机会难得！"
cc.append(jline({"text": spam_doc()}))  # spam model drop
cc.append(jline({"text": gibberish(200)}))  # quality model drop

# dedup victims
near_a = article(min_chars=300, paragraphs=1)
chars = list(near_a)
for pos in rng.sample(range(10, len(chars) - 10), 4):
    chars[pos] = "改"
near_b = "".join(chars)
cc.append(jline({"text": near_a}))
cc.append(jline({"text": near_b}))
cross_dup = article(min_chars=260, paragraphs=1)
cc.append(jline({"text": cross_dup}))
cc.append('{"broken json line')  # ingest skip

# -------------------------------------------------------------------- others
news = [jline({"text": article(), "title": f"综合报道{i}"}) for i in range(9)]
news.append(jline({"text": cross_dup}))  # cross-source duplicate

ebooks = [jline({"text": article(min_chars=300, paragraphs=3)}) for _ in range(8)]
encyclopedia = [
    jline({"text": f"{rng.choice(TOPICS)}是现代社会关注的重要议题。" + article()})
    for _ in range(8)
]

public = []
for i in range(7):
    q = f"请简要介绍{rng.choice(TOPICS)}的发展现状。"
    a = article(min_chars=200, paragraphs=1)
    public.append(jline({"question": q, "answer": a, "label": str(i % 3)}))
public.append(jline({"label": "9"}))  # no text fields -> rejected

write(OUT / "common_crawl.jsonl", cc)
write(OUT / "news.jsonl", news)
write(OUT / "ebooks.jsonl", ebooks)
write(OUT / "encyclopedia.jsonl", encyclopedia)
write(OUT / "public.jsonl", public)

# ------------------------------------------------------------------ dev set
dev = [sentence() + sentence() for _ in range(40)]
write(OUT / "dev.txt", dev)

# ------------------------------------------------------------ training sets
junk = [jline({"text": spam_doc()}) for _ in range(120)]
fluent = [jline({"text": article(min_chars=150, paragraphs=1)}) for _ in range(120)]
gib = []
for _ in range(120):
    if rng.random() < 0.5:
        gib.append(jline({"text": gibberish(rng.randrange(150, 260))}))
    else:
        frag = "".join(rng.choice(["好", "哈", "顶", "赞", "沙发"]) for _ in range(rng.randrange(60, 120)))
        gib.append(jline({"text": frag}))
spam_neg = fluent[:60] + gib[:60]
write(OUT / "train" / "junk.jsonl", junk)
write(OUT / "train" / "fluent.jsonl", fluent)
write(OUT / "train" / "gibberish.jsonl", gib)
write(OUT / "train" / "spam_neg.jsonl", spam_neg)

# ---------------------------------------------------------------- mix + config
mix = """total_training_tokens = 60000

[[entries]]
source = "public"
quantity_tokens = 1600
weight = 0.10

[[entries]]
source = "encyclopedia"
quantity_tokens = 2000
weight = 0.20

[[entries]]
source = "ebooks"
quantity_tokens = 3600
weight = 0.20

[[entries]]
source = "common_crawl"
quantity_tokens = 4800
weight = 0.30

[[entries]]
source = "news"
quantity_tokens = 2200
weight = 0.20
"""
(OUT / "mix.toml").write_text(mix, encoding="utf-8")
print(f"wrote {OUT / 'mix.toml'}")

config = """seed = 42
workers = 2

[io]
output_dir = "out"
shard_size = 25

[io.inputs]
public = ["public.jsonl"]
encyclopedia = ["encyclopedia.jsonl"]
ebooks = ["ebooks.jsonl"]
common_crawl = ["common_crawl.jsonl"]
news = ["news.jsonl"]

[io.text_fields]
public = ["question", "answer"]

[filter.spam]
train_positive = "train/junk.jsonl"
train_negative = "train/spam_neg.jsonl"
dim_log2 = 14

[filter.quality]
train_positive = "train/fluent.jsonl"
train_negative = "train/gibberish.jsonl"
dim_log2 = 14

[eval]
dev_path = "dev.txt"
sample_docs = 500
review_sample = 10

[tokenizer]
mode = "bpe"
train_target_vocab = 600

[mix]
spec_path = "mix.toml"
n_draws = 2000
"""
(OUT / "config.toml").write_text(config, encoding="utf-8")
print(f"wrote {OUT / 'config.toml'}")
